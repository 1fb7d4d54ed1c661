#include "deepsdrf/net.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "deepsdrf/common.hpp"

namespace deepsdrf {

namespace {

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& x) {
  return 1.0 / (1.0 + (-x).exp());
}

double softplus(double x) {
  // log(1 + e^x) without overflow.
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

void NetConfig::validate() const {
  if (history_u < 1) throw std::invalid_argument("NetConfig: history_u must be >= 1");
  if (input_dim < 1) throw std::invalid_argument("NetConfig: input_dim must be >= 1");
  if (dense_layers < 0) throw std::invalid_argument("NetConfig: dense_layers must be >= 0");
  if (dense_layers > 0 && dense_units < 1)
    throw std::invalid_argument("NetConfig: dense_units must be >= 1");
  if (arch == Arch::kRecurrent && recurrent_units < 1)
    throw std::invalid_argument("NetConfig: recurrent_units must be >= 1");
  if (output_dim < 1) throw std::invalid_argument("NetConfig: output_dim must be >= 1");
  if (head == OutputHead::kPerStepSigmoid && output_dim != 1)
    throw std::invalid_argument("NetConfig: per-step sigmoid head requires output_dim == 1");
  if (head == OutputHead::kPerStepSigmoid && arch == Arch::kLinear)
    throw std::invalid_argument("NetConfig: per-step head requires the recurrent arch");
  if (batch_size < 1) throw std::invalid_argument("NetConfig: batch_size must be >= 1");
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("NetConfig: learning_rate must be > 0");
  if (epochs < 1) throw std::invalid_argument("NetConfig: epochs must be >= 1");
}

void SequenceBatch::validate_shapes() const {
  if (steps < 1 || features < 1)
    throw std::invalid_argument("SequenceBatch: steps and features must be >= 1");
  if (inputs.cols() != static_cast<Eigen::Index>(steps) * features)
    throw std::invalid_argument("SequenceBatch: inputs width != steps * features");
  if (mask.size() != 0 &&
      (mask.rows() != inputs.rows() || mask.cols() != static_cast<Eigen::Index>(steps)))
    throw std::invalid_argument("SequenceBatch: mask shape mismatch");
}

Eigen::MatrixXd SequenceBatch::effective_mask() const {
  if (mask.size() != 0) return mask;
  return Eigen::MatrixXd::Ones(inputs.rows(), steps);
}

SequenceBatch SequenceBatch::take(const std::vector<int>& row_indices) const {
  SequenceBatch out;
  out.steps = steps;
  out.features = features;
  const auto n = static_cast<Eigen::Index>(row_indices.size());
  out.inputs.resize(n, inputs.cols());
  if (mask.size() != 0) out.mask.resize(n, mask.cols());
  if (targets.size() != 0) out.targets.resize(n, targets.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.inputs.row(i) = inputs.row(row_indices[i]);
    if (mask.size() != 0) out.mask.row(i) = mask.row(row_indices[i]);
    if (targets.size() != 0) out.targets.row(i) = targets.row(row_indices[i]);
  }
  return out;
}

Network::Network(const NetConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int f = cfg_.input_dim;
  const int h = cfg_.recurrent_units;

  int head_in = 0;
  if (cfg_.arch == Arch::kRecurrent) {
    for (const char* gate : {"wz", "wr", "wh"})
      layout_.push_back({gate, 0, h, f});
    for (const char* gate : {"uz", "ur", "uh"})
      layout_.push_back({gate, 0, h, h});
    for (const char* gate : {"bz", "br", "bh"})
      layout_.push_back({gate, 0, h, 1});
    head_in = h;
    int in = h;
    for (int l = 0; l < cfg_.dense_layers; ++l) {
      layout_.push_back({"dense_w" + std::to_string(l), 0, cfg_.dense_units, in});
      layout_.push_back({"dense_b" + std::to_string(l), 0, cfg_.dense_units, 1});
      in = cfg_.dense_units;
      head_in = in;
    }
  } else {
    head_in = cfg_.history_u * f;
  }
  layout_.push_back({"head_w", 0, cfg_.output_dim, head_in});
  layout_.push_back({"head_b", 0, cfg_.output_dim, 1});

  int total = 0;
  for (auto& block : layout_) {
    block.offset = total;
    total += block.rows * block.cols;
  }
  theta_.resize(total);

  auto rng = make_rng(derive_seed(cfg_.seed, 0x696e6974));
  for (const auto& block : layout_) {
    const bool is_bias = block.name == "bz" || block.name == "br" ||
                         block.name == "bh" ||
                         block.name.find("_b") != std::string::npos;
    if (is_bias) {
      theta_.segment(block.offset, block.rows * block.cols).setZero();
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(block.cols));
    std::uniform_real_distribution<double> unif(-bound, bound);
    for (int i = 0; i < block.rows * block.cols; ++i) theta_(block.offset + i) = unif(rng);
  }
}

void Network::set_parameters_flat(const Eigen::VectorXd& p) {
  if (p.size() != theta_.size())
    throw std::invalid_argument("set_parameters_flat: size mismatch");
  theta_ = p;
}

namespace {

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
using MutMap = Eigen::Map<Eigen::MatrixXd>;

ConstMap view(const Eigen::VectorXd& theta, const Network::ParamBlock& b) {
  return ConstMap(theta.data() + b.offset, b.rows, b.cols);
}
MutMap view(Eigen::VectorXd& theta, const Network::ParamBlock& b) {
  return MutMap(theta.data() + b.offset, b.rows, b.cols);
}

const Network::ParamBlock& block_of(const std::vector<Network::ParamBlock>& layout,
                                    const std::string& name) {
  for (const auto& b : layout)
    if (b.name == name) return b;
  throw std::logic_error("parameter block not found: " + name);
}

}  // namespace

struct Network::Cache {
  // Per time step, rows = samples.
  std::vector<Eigen::MatrixXd> h, z, r, c;    // recurrent states and gates
  std::vector<Eigen::MatrixXd> dense_in;      // per apply-point, per layer inputs
  std::vector<std::vector<Eigen::MatrixXd>> dense_act;  // post-tanh activations
  std::vector<Eigen::MatrixXd> logits;        // per-step head pre-sigmoid
  Eigen::MatrixXd masked_flat;                // linear arch: masked inputs
  Eigen::MatrixXd output;
};

void Network::check_batch(const SequenceBatch& batch) const {
  batch.validate_shapes();
  if (batch.steps != cfg_.history_u)
    throw std::invalid_argument("Network: batch steps != configured history_u");
  if (batch.features != cfg_.input_dim)
    throw std::invalid_argument("Network: batch features != configured input_dim");
}

Eigen::MatrixXd Network::run_forward(const SequenceBatch& batch, Cache* cache) const {
  const int n = batch.rows();
  const int steps = batch.steps;
  const int f = cfg_.input_dim;
  const Eigen::MatrixXd mask = batch.effective_mask();

  auto dense_stack = [&](const Eigen::MatrixXd& in,
                         std::vector<Eigen::MatrixXd>* acts) -> Eigen::MatrixXd {
    Eigen::MatrixXd a = in;
    for (int l = 0; l < cfg_.dense_layers; ++l) {
      const auto& wb = block_of(layout_, "dense_w" + std::to_string(l));
      const auto& bb = block_of(layout_, "dense_b" + std::to_string(l));
      Eigen::MatrixXd pre = a * view(theta_, wb).transpose();
      pre.rowwise() += view(theta_, bb).col(0).transpose();
      a = pre.array().tanh();
      if (acts) acts->push_back(a);
    }
    return a;
  };
  const auto& head_w = block_of(layout_, "head_w");
  const auto& head_b = block_of(layout_, "head_b");
  auto head = [&](const Eigen::MatrixXd& a) -> Eigen::MatrixXd {
    Eigen::MatrixXd y = a * view(theta_, head_w).transpose();
    y.rowwise() += view(theta_, head_b).col(0).transpose();
    return y;
  };

  if (cfg_.arch == Arch::kLinear) {
    // Zero out masked steps so they cannot influence the output.
    Eigen::MatrixXd masked = batch.inputs;
    for (int t = 0; t < steps; ++t)
      masked.middleCols(t * f, f).array().colwise() *= mask.col(t).array();
    Eigen::MatrixXd y = head(masked);
    if (cache) {
      cache->masked_flat = std::move(masked);
      cache->output = y;
    }
    return y;
  }

  const auto& wz = block_of(layout_, "wz");
  const auto& wr = block_of(layout_, "wr");
  const auto& wh = block_of(layout_, "wh");
  const auto& uz = block_of(layout_, "uz");
  const auto& ur = block_of(layout_, "ur");
  const auto& uh = block_of(layout_, "uh");
  const auto& bz = block_of(layout_, "bz");
  const auto& br = block_of(layout_, "br");
  const auto& bh = block_of(layout_, "bh");

  const int hdim = cfg_.recurrent_units;
  Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(n, hdim);
  Eigen::MatrixXd per_step_out;
  if (cfg_.head == OutputHead::kPerStepSigmoid) per_step_out.resize(n, steps);

  for (int t = 0; t < steps; ++t) {
    const auto xt = batch.inputs.middleCols(t * f, f);
    Eigen::MatrixXd zpre = xt * view(theta_, wz).transpose() +
                           h_prev * view(theta_, uz).transpose();
    zpre.rowwise() += view(theta_, bz).col(0).transpose();
    Eigen::MatrixXd z = sigmoid(zpre.array());

    Eigen::MatrixXd rpre = xt * view(theta_, wr).transpose() +
                           h_prev * view(theta_, ur).transpose();
    rpre.rowwise() += view(theta_, br).col(0).transpose();
    Eigen::MatrixXd r = sigmoid(rpre.array());

    Eigen::MatrixXd cpre = xt * view(theta_, wh).transpose() +
                           (r.array() * h_prev.array()).matrix() * view(theta_, uh).transpose();
    cpre.rowwise() += view(theta_, bh).col(0).transpose();
    Eigen::MatrixXd c = cpre.array().tanh();

    Eigen::MatrixXd h_raw =
        ((1.0 - z.array()) * h_prev.array() + z.array() * c.array()).matrix();
    const auto m = mask.col(t).array();
    Eigen::MatrixXd h =
        (h_raw.array().colwise() * m + h_prev.array().colwise() * (1.0 - m)).matrix();

    if (cache) {
      cache->z.push_back(std::move(z));
      cache->r.push_back(std::move(r));
      cache->c.push_back(std::move(c));
      cache->h.push_back(h);
    }

    if (cfg_.head == OutputHead::kPerStepSigmoid) {
      std::vector<Eigen::MatrixXd> acts;
      Eigen::MatrixXd a = dense_stack(h, cache ? &acts : nullptr);
      Eigen::MatrixXd logit = head(a);
      per_step_out.col(t) = sigmoid(logit.array()).col(0);
      if (cache) {
        cache->dense_in.push_back(h);
        cache->dense_act.push_back(std::move(acts));
        cache->logits.push_back(std::move(logit));
      }
    }
    h_prev = std::move(h);
  }

  if (cfg_.head == OutputHead::kPerStepSigmoid) {
    if (cache) cache->output = per_step_out;
    return per_step_out;
  }

  std::vector<Eigen::MatrixXd> acts;
  Eigen::MatrixXd a = dense_stack(h_prev, cache ? &acts : nullptr);
  Eigen::MatrixXd y = head(a);
  if (cache) {
    cache->dense_in.push_back(h_prev);
    cache->dense_act.push_back(std::move(acts));
    cache->output = y;
  }
  return y;
}

Eigen::MatrixXd Network::forward(const SequenceBatch& batch) const {
  check_batch(batch);
  return run_forward(batch, nullptr);
}

namespace {

// Loss value and gradient with respect to the network output. For the
// per-step sigmoid head with the masked BCE loss, the gradient is with
// respect to the logits (signalled through `grad_is_logit`).
struct LossEval {
  double value = 0.0;
  Eigen::MatrixXd grad;
  bool grad_is_logit = false;
};

LossEval eval_loss(const NetConfig& cfg, const SequenceBatch& batch,
                   const Eigen::MatrixXd& output, LossKind kind, bool want_grad) {
  LossEval out;
  const int n = batch.rows();
  const Eigen::MatrixXd mask = batch.effective_mask();

  switch (kind) {
    case LossKind::kMse: {
      if (batch.targets.rows() != n || batch.targets.cols() != output.cols())
        throw std::invalid_argument("mse: target shape mismatch");
      if (cfg.head == OutputHead::kPerStepSigmoid) {
        const double denom = mask.sum();
        Eigen::ArrayXXd diff = (output - batch.targets).array() * mask.array();
        out.value = denom > 0.0 ? (diff * diff).sum() / denom : 0.0;
        if (want_grad)
          out.grad = denom > 0.0
                         ? (2.0 * diff / denom).matrix().eval()
                         : Eigen::MatrixXd::Zero(n, output.cols()).eval();
      } else {
        const double denom = static_cast<double>(n) * output.cols();
        Eigen::ArrayXXd diff = (output - batch.targets).array();
        out.value = (diff * diff).sum() / denom;
        if (want_grad) out.grad = (2.0 * diff / denom).matrix();
      }
      break;
    }
    case LossKind::kCde: {
      // Per sample: sum_j beta_j^2 - 2 sum_j beta_j phi_j(z_i); the first
      // term is the closed-form integral of the squared expansion over the
      // unit interval (orthonormality), the second is the density at the
      // observed point.
      if (cfg.head != OutputHead::kVector)
        throw std::invalid_argument("cde loss requires the vector head");
      if (batch.targets.rows() != n || batch.targets.cols() != output.cols())
        throw std::invalid_argument("cde: target shape mismatch (basis values expected)");
      const double inv_n = 1.0 / static_cast<double>(n);
      out.value = inv_n * (output.array().square().sum() -
                           2.0 * (output.array() * batch.targets.array()).sum());
      if (want_grad) out.grad = (2.0 * inv_n) * (output - batch.targets);
      break;
    }
    case LossKind::kMaskedBce: {
      if (cfg.head != OutputHead::kPerStepSigmoid)
        throw std::invalid_argument("masked bce requires the per-step sigmoid head");
      if (batch.targets.rows() != n || batch.targets.cols() != output.cols())
        throw std::invalid_argument("masked bce: target shape mismatch");
      const double denom = mask.sum();
      if (denom <= 0.0) {
        out.value = 0.0;
        if (want_grad) {
          out.grad = Eigen::MatrixXd::Zero(n, output.cols());
          out.grad_is_logit = true;
        }
        break;
      }
      // Stable value from the probabilities' logits: softplus(l) - y*l.
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int t = 0; t < batch.steps; ++t) {
          if (mask(i, t) == 0.0) continue;
          const double p = std::min(1.0 - 1e-15, std::max(1e-15, output(i, t)));
          const double logit = std::log(p) - std::log1p(-p);
          acc += softplus(logit) - batch.targets(i, t) * logit;
        }
      }
      out.value = acc / denom;
      if (want_grad) {
        out.grad = ((output - batch.targets).array() * mask.array() / denom).matrix();
        out.grad_is_logit = true;
      }
      break;
    }
  }
  return out;
}

}  // namespace

double Network::loss(const SequenceBatch& batch, LossKind kind) const {
  check_batch(batch);
  const Eigen::MatrixXd out = run_forward(batch, nullptr);
  return eval_loss(cfg_, batch, out, kind, false).value;
}

double Network::loss_and_gradient(const SequenceBatch& batch, LossKind kind,
                                  Eigen::VectorXd& grad) const {
  check_batch(batch);
  Cache cache;
  const Eigen::MatrixXd out = run_forward(batch, &cache);
  LossEval le = eval_loss(cfg_, batch, out, kind, true);

  grad.setZero(theta_.size());
  const int n = batch.rows();
  const int steps = batch.steps;
  const int f = cfg_.input_dim;
  const Eigen::MatrixXd mask = batch.effective_mask();

  const auto& head_w = block_of(layout_, "head_w");
  const auto& head_b = block_of(layout_, "head_b");

  if (cfg_.arch == Arch::kLinear) {
    // y = masked_flat * Wy^T + by
    view(grad, head_w) += le.grad.transpose() * cache.masked_flat;
    view(grad, head_b).col(0) += le.grad.colwise().sum().transpose();
    return le.value;
  }

  // Backprop through an application of the dense stack + head. `dout` is the
  // loss gradient at the head output (or logits); returns gradient at the
  // stack input. apply_idx selects the cached activations.
  auto dense_backward = [&](const Eigen::MatrixXd& dout, int apply_idx) -> Eigen::MatrixXd {
    const auto& acts = cache.dense_act[apply_idx];
    const Eigen::MatrixXd& stack_in = cache.dense_in[apply_idx];
    const Eigen::MatrixXd& head_in =
        cfg_.dense_layers > 0 ? acts.back() : stack_in;
    view(grad, head_w) += dout.transpose() * head_in;
    view(grad, head_b).col(0) += dout.colwise().sum().transpose();
    Eigen::MatrixXd da = dout * view(theta_, head_w);
    for (int l = cfg_.dense_layers - 1; l >= 0; --l) {
      const Eigen::MatrixXd& a = acts[static_cast<std::size_t>(l)];
      Eigen::MatrixXd dpre = (da.array() * (1.0 - a.array().square())).matrix();
      const auto& wb = block_of(layout_, "dense_w" + std::to_string(l));
      const auto& bb = block_of(layout_, "dense_b" + std::to_string(l));
      const Eigen::MatrixXd& in = l > 0 ? acts[static_cast<std::size_t>(l - 1)] : stack_in;
      view(grad, wb) += dpre.transpose() * in;
      view(grad, bb).col(0) += dpre.colwise().sum().transpose();
      da = dpre * view(theta_, wb);
    }
    return da;
  };

  const int hdim = cfg_.recurrent_units;
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(n, hdim);

  if (cfg_.head == OutputHead::kVector) {
    dh = dense_backward(le.grad, 0);
  }

  const auto& wz = block_of(layout_, "wz");
  const auto& wr = block_of(layout_, "wr");
  const auto& wh = block_of(layout_, "wh");
  const auto& uz = block_of(layout_, "uz");
  const auto& ur = block_of(layout_, "ur");
  const auto& uh = block_of(layout_, "uh");
  const auto& bz = block_of(layout_, "bz");
  const auto& br = block_of(layout_, "br");
  const auto& bh = block_of(layout_, "bh");

  for (int t = steps - 1; t >= 0; --t) {
    if (cfg_.head == OutputHead::kPerStepSigmoid) {
      Eigen::MatrixXd dlogit(n, 1);
      if (le.grad_is_logit) {
        dlogit.col(0) = le.grad.col(t);
      } else {
        // Chain through the sigmoid: dL/dlogit = dL/dp * p * (1-p).
        const auto p = cache.output.col(t).array();
        dlogit.col(0) = (le.grad.col(t).array() * p * (1.0 - p)).matrix();
      }
      dh += dense_backward(dlogit, t);
    }

    const Eigen::MatrixXd& z = cache.z[static_cast<std::size_t>(t)];
    const Eigen::MatrixXd& r = cache.r[static_cast<std::size_t>(t)];
    const Eigen::MatrixXd& c = cache.c[static_cast<std::size_t>(t)];
    const Eigen::MatrixXd h_prev = t > 0 ? cache.h[static_cast<std::size_t>(t - 1)]
                                         : Eigen::MatrixXd::Zero(n, hdim);
    const auto xt = batch.inputs.middleCols(t * f, f);
    const auto m = mask.col(t).array();

    Eigen::MatrixXd dh_raw = (dh.array().colwise() * m).matrix();
    Eigen::MatrixXd dh_prev = (dh.array().colwise() * (1.0 - m)).matrix();

    Eigen::MatrixXd dz = (dh_raw.array() * (c.array() - h_prev.array())).matrix();
    Eigen::MatrixXd dc = (dh_raw.array() * z.array()).matrix();
    dh_prev.array() += dh_raw.array() * (1.0 - z.array());

    Eigen::MatrixXd dcpre = (dc.array() * (1.0 - c.array().square())).matrix();
    view(grad, wh) += dcpre.transpose() * xt;
    view(grad, bh).col(0) += dcpre.colwise().sum().transpose();
    Eigen::MatrixXd drh = dcpre * view(theta_, uh);
    view(grad, uh) += dcpre.transpose() * (r.array() * h_prev.array()).matrix();
    Eigen::MatrixXd dr = (drh.array() * h_prev.array()).matrix();
    dh_prev.array() += drh.array() * r.array();

    Eigen::MatrixXd dzpre = (dz.array() * z.array() * (1.0 - z.array())).matrix();
    view(grad, wz) += dzpre.transpose() * xt;
    view(grad, uz) += dzpre.transpose() * h_prev;
    view(grad, bz).col(0) += dzpre.colwise().sum().transpose();
    dh_prev += dzpre * view(theta_, uz);

    Eigen::MatrixXd drpre = (dr.array() * r.array() * (1.0 - r.array())).matrix();
    view(grad, wr) += drpre.transpose() * xt;
    view(grad, ur) += drpre.transpose() * h_prev;
    view(grad, br).col(0) += drpre.colwise().sum().transpose();
    dh_prev += drpre * view(theta_, ur);

    dh = std::move(dh_prev);
  }
  return le.value;
}

TrainResult train(Network& net, const SequenceBatch& data, LossKind kind) {
  data.validate_shapes();
  if (data.rows() < 1) throw std::invalid_argument("train: dataset is empty");
  const NetConfig& cfg = net.config();

  TrainResult result;
  result.epoch_loss.push_back(net.loss(data, kind));
  if (!std::isfinite(result.epoch_loss.back()))
    throw TrainingDivergence("train: non-finite loss before training");

  double best_loss = result.epoch_loss.back();
  Eigen::VectorXd best_theta = net.parameters_flat();

  auto rng = make_rng(derive_seed(cfg.seed, 0x747261696eULL));
  std::vector<int> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), 0);

  Eigen::VectorXd grad(net.parameter_count());
  // Adam state.
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(net.parameter_count());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(net.parameter_count());
  long adam_t = 0;
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  const int batch = std::min<int>(cfg.batch_size, data.rows());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      std::vector<int> idx(order.begin() + static_cast<long>(start),
                           order.begin() + static_cast<long>(stop));
      SequenceBatch mini = data.take(idx);
      const double batch_loss = net.loss_and_gradient(mini, kind, grad);
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "train: loss diverged (non-finite) at epoch " << epoch
            << " with learning_rate " << cfg.learning_rate;
        throw TrainingDivergence(msg.str());
      }
      Eigen::VectorXd theta = net.parameters_flat();
      if (cfg.optimizer == Optimizer::kSgd) {
        theta -= cfg.learning_rate * grad;
      } else {
        ++adam_t;
        m1 = beta1 * m1 + (1.0 - beta1) * grad;
        m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseProduct(grad);
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t));
        theta -= (cfg.learning_rate * (m1 / bc1).array() /
                  ((m2 / bc2).array().sqrt() + adam_eps))
                     .matrix();
      }
      net.set_parameters_flat(theta);
    }
    const double epoch_loss = net.loss(data, kind);
    if (!std::isfinite(epoch_loss)) {
      std::ostringstream msg;
      msg << "train: loss diverged (non-finite) after epoch " << epoch
          << " with learning_rate " << cfg.learning_rate;
      throw TrainingDivergence(msg.str());
    }
    result.epoch_loss.push_back(epoch_loss);
    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      best_theta = net.parameters_flat();
    }
  }

  if (result.epoch_loss.back() > result.epoch_loss.front()) {
    net.set_parameters_flat(best_theta);
    result.restored_best = true;
  }
  return result;
}

double gradient_check(const Network& net, const SequenceBatch& sample, LossKind kind) {
  Network probe = net;
  Eigen::VectorXd analytic(probe.parameter_count());
  probe.loss_and_gradient(sample, kind, analytic);

  const double eps = 1e-5;
  Eigen::VectorXd theta = probe.parameters_flat();
  double max_rel = 0.0;
  for (int i = 0; i < theta.size(); ++i) {
    const double saved = theta(i);
    theta(i) = saved + eps;
    probe.set_parameters_flat(theta);
    const double up = probe.loss(sample, kind);
    theta(i) = saved - eps;
    probe.set_parameters_flat(theta);
    const double down = probe.loss(sample, kind);
    theta(i) = saved;
    const double fd = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(fd), std::abs(analytic(i)), 1.0});
    max_rel = std::max(max_rel, std::abs(fd - analytic(i)) / denom);
  }
  probe.set_parameters_flat(theta);
  return max_rel;
}

TuningRanges TuningRanges::defaults(int max_followup, int dim_d, int n_samples) {
  TuningRanges r;
  r.history_min = 1;
  r.history_max = std::max(1, max_followup);
  r.batch_min = std::min(128, n_samples);
  r.batch_max = std::max(1, n_samples);
  r.dense_layers_min = 1;
  r.dense_layers_max = std::max(1, max_followup);
  r.dense_units_min = 1;
  r.dense_units_max = std::max(1, dim_d);
  r.recurrent_min = 1;
  r.recurrent_max = std::max(1, max_followup);
  return r;
}

namespace {
int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, std::max(lo, hi));
  return d(rng);
}
}  // namespace

NetConfig sample_net_config(const NetConfig& base, const TuningRanges& ranges,
                            std::mt19937_64& rng) {
  NetConfig cfg = base;
  cfg.history_u = uniform_int(rng, ranges.history_min, ranges.history_max);
  cfg.batch_size = uniform_int(rng, ranges.batch_min, ranges.batch_max);
  cfg.dense_layers = uniform_int(rng, ranges.dense_layers_min, ranges.dense_layers_max);
  cfg.dense_units = uniform_int(rng, ranges.dense_units_min, ranges.dense_units_max);
  cfg.recurrent_units = uniform_int(rng, ranges.recurrent_min, ranges.recurrent_max);
  return cfg;
}

NetConfig random_search(const NetConfig& base, const TuningRanges& ranges, int candidates,
                        std::uint64_t seed,
                        const std::function<double(const NetConfig&)>& score) {
  if (candidates < 0) throw std::invalid_argument("random_search: candidates must be >= 0");
  NetConfig best = base;
  double best_score = score(base);
  auto rng = make_rng(derive_seed(seed, 0x727365ULL));
  for (int k = 0; k < candidates; ++k) {
    NetConfig cand = sample_net_config(base, ranges, rng);
    cand.seed = derive_seed(seed, 0x1000 + static_cast<std::uint64_t>(k));
    const double s = score(cand);
    if (s < best_score) {
      best_score = s;
      best = cand;
    }
  }
  return best;
}

}  // namespace deepsdrf
