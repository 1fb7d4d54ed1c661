#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "deepsdrf/basis.hpp"
#include "deepsdrf/common.hpp"
#include "deepsdrf/net.hpp"

using namespace deepsdrf;

namespace {

SequenceBatch toy_regression(int n, int steps, int features, std::uint64_t seed,
                             double slope = 2.0) {
  SequenceBatch b;
  b.steps = steps;
  b.features = features;
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  b.inputs.resize(n, steps * features);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < steps * features; ++c) b.inputs(i, c) = unif(rng);
  b.targets = slope * b.inputs.rightCols(1);
  return b;
}

}  // namespace

TEST_CASE("init: deterministic per seed, distinct across seeds, bounded") {
  NetConfig cfg;
  cfg.input_dim = 4;
  cfg.recurrent_units = 4;
  cfg.output_dim = 2;
  cfg.seed = 10;
  Network a(cfg), b(cfg);
  CHECK(a.parameters_flat() == b.parameters_flat());
  cfg.seed = 11;
  Network c(cfg);
  CHECK(a.parameters_flat() != c.parameters_flat());
  // fan_in = 4 everywhere here, so weights live in [-0.5, 0.5].
  CHECK(a.parameters_flat().cwiseAbs().maxCoeff() <= 0.5);
}

TEST_CASE("linear arch: output is the affine map of the flattened window") {
  NetConfig cfg;
  cfg.arch = Arch::kLinear;
  cfg.history_u = 1;
  cfg.input_dim = 1;
  cfg.output_dim = 1;
  cfg.seed = 4;
  Network net(cfg);
  Eigen::VectorXd theta(2);
  theta << 3.5, -0.25;  // weight, bias
  net.set_parameters_flat(theta);
  SequenceBatch b;
  b.steps = 1;
  b.features = 1;
  b.inputs.resize(2, 1);
  b.inputs << 1.0, -2.0;
  const Eigen::MatrixXd y = net.forward(b);
  CHECK(y(0, 0) == doctest::Approx(3.25));
  CHECK(y(1, 0) == doctest::Approx(-7.25));
}

TEST_CASE("train: one-parameter linear fit recovers the slope") {
  NetConfig cfg;
  cfg.arch = Arch::kLinear;
  cfg.history_u = 1;
  cfg.input_dim = 1;
  cfg.output_dim = 1;
  cfg.learning_rate = 0.05;
  cfg.epochs = 200;
  cfg.batch_size = 32;
  cfg.seed = 8;
  Network net(cfg);
  SequenceBatch data = toy_regression(256, 1, 1, 21, 2.0);
  const TrainResult result = train(net, data, LossKind::kMse);
  CHECK(result.epoch_loss.back() <= result.epoch_loss.front());
  // Learned slope = f(1) - f(0).
  SequenceBatch probe;
  probe.steps = 1;
  probe.features = 1;
  probe.inputs.resize(2, 1);
  probe.inputs << 1.0, 0.0;
  const Eigen::MatrixXd y = net.forward(probe);
  CHECK(y(0, 0) - y(1, 0) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("train: constant targets drive the mse toward zero") {
  NetConfig cfg;
  cfg.input_dim = 2;
  cfg.recurrent_units = 4;
  cfg.dense_layers = 1;
  cfg.dense_units = 4;
  cfg.output_dim = 1;
  cfg.history_u = 3;
  cfg.epochs = 150;
  cfg.learning_rate = 0.05;
  cfg.seed = 5;
  Network net(cfg);
  SequenceBatch data = toy_regression(128, 3, 2, 22);
  data.targets.setConstant(0.7);
  train(net, data, LossKind::kMse);
  CHECK(net.loss(data, LossKind::kMse) < 1e-3);
}

TEST_CASE("train: throws on divergence with a diagnostic") {
  NetConfig cfg;
  cfg.arch = Arch::kLinear;
  cfg.history_u = 1;
  cfg.input_dim = 1;
  cfg.output_dim = 1;
  cfg.learning_rate = 1e6;  // wildly unstable
  cfg.epochs = 50;
  cfg.seed = 2;
  Network net(cfg);
  SequenceBatch data = toy_regression(64, 1, 1, 23, 5.0);
  CHECK_THROWS_AS(train(net, data, LossKind::kMse), TrainingDivergence);
}

TEST_CASE("train: bit-deterministic given config, data and seed") {
  NetConfig cfg;
  cfg.input_dim = 2;
  cfg.history_u = 2;
  cfg.output_dim = 1;
  cfg.epochs = 5;
  cfg.seed = 77;
  SequenceBatch data = toy_regression(64, 2, 2, 24);
  Network n1(cfg), n2(cfg);
  train(n1, data, LossKind::kMse);
  train(n2, data, LossKind::kMse);
  CHECK(n1.parameters_flat() == n2.parameters_flat());
}

TEST_CASE("per-step sigmoid head stays in (0,1)") {
  NetConfig cfg;
  cfg.input_dim = 3;
  cfg.history_u = 5;
  cfg.head = OutputHead::kPerStepSigmoid;
  cfg.output_dim = 1;
  cfg.seed = 6;
  Network net(cfg);
  SequenceBatch data = toy_regression(100, 5, 3, 25);
  data.targets = Eigen::MatrixXd::Zero(100, 5);
  const Eigen::MatrixXd p = net.forward(data);
  CHECK(p.minCoeff() > 0.0);
  CHECK(p.maxCoeff() < 1.0);
}

TEST_CASE("mask: all-zero mask gives zero loss regardless of inputs") {
  NetConfig cfg;
  cfg.input_dim = 2;
  cfg.history_u = 4;
  cfg.head = OutputHead::kPerStepSigmoid;
  cfg.output_dim = 1;
  cfg.seed = 9;
  Network net(cfg);
  SequenceBatch data = toy_regression(32, 4, 2, 26);
  data.targets = Eigen::MatrixXd::Zero(32, 4);
  data.mask = Eigen::MatrixXd::Zero(32, 4);
  CHECK(net.loss(data, LossKind::kMaskedBce) == 0.0);
  data.inputs.setConstant(1e6);
  CHECK(net.loss(data, LossKind::kMaskedBce) == 0.0);
}

TEST_CASE("mask: values at masked steps change neither loss nor gradients") {
  NetConfig cfg;
  cfg.input_dim = 2;
  cfg.history_u = 4;
  cfg.head = OutputHead::kPerStepSigmoid;
  cfg.output_dim = 1;
  cfg.dense_layers = 1;
  cfg.dense_units = 3;
  cfg.recurrent_units = 3;
  cfg.seed = 12;
  Network net(cfg);
  SequenceBatch data = toy_regression(16, 4, 2, 27);
  data.targets = Eigen::MatrixXd::Zero(16, 4);
  data.mask = Eigen::MatrixXd::Ones(16, 4);
  data.mask.rightCols(2).setZero();  // prefix mask: steps 2,3 unobserved

  Eigen::VectorXd g1, g2;
  const double l1 = net.loss_and_gradient(data, LossKind::kMaskedBce, g1);
  SequenceBatch tampered = data;
  tampered.inputs.rightCols(4).setConstant(123.0);  // features of steps 2,3
  const double l2 = net.loss_and_gradient(tampered, LossKind::kMaskedBce, g2);
  CHECK(l1 == l2);
  CHECK(g1 == g2);
}

TEST_CASE("gradient check: linear net with mse is exact to first order") {
  NetConfig cfg;
  cfg.arch = Arch::kLinear;
  cfg.history_u = 2;
  cfg.input_dim = 3;
  cfg.output_dim = 2;
  cfg.seed = 3;
  Network net(cfg);
  SequenceBatch data = toy_regression(16, 2, 3, 28);
  data.targets.resize(16, 2);
  data.targets.setRandom();
  CHECK(gradient_check(net, data, LossKind::kMse) < 1e-6);
}

TEST_CASE("gradient check: GRU plus dense under every loss") {
  auto rng = make_rng(404);
  std::uniform_int_distribution<int> pick_steps(1, 5);
  std::uniform_int_distribution<int> pick_units(1, 6);
  std::uniform_int_distribution<int> pick_layers(0, 2);
  for (int rep = 0; rep < 10; ++rep) {
    NetConfig cfg;
    cfg.history_u = pick_steps(rng);
    cfg.input_dim = pick_units(rng);
    cfg.recurrent_units = pick_units(rng);
    cfg.dense_layers = pick_layers(rng);
    cfg.dense_units = pick_units(rng);
    cfg.seed = 1000 + rep;

    const int n = 8;
    SequenceBatch data = toy_regression(n, cfg.history_u, cfg.input_dim, 500 + rep);
    // Random prefix masks.
    data.mask = Eigen::MatrixXd::Ones(n, cfg.history_u);
    std::uniform_int_distribution<int> cut(1, cfg.history_u);
    for (int i = 0; i < n; ++i)
      for (int t = cut(rng); t < cfg.history_u; ++t) data.mask(i, t) = 0.0;

    const int kind = rep % 3;
    if (kind == 0) {
      cfg.output_dim = 2;
      Network net(cfg);
      data.targets.resize(n, 2);
      data.targets.setRandom();
      CHECK(gradient_check(net, data, LossKind::kMse) < 1e-4);
    } else if (kind == 1) {
      cfg.output_dim = 4;  // basis coefficients
      Network net(cfg);
      data.targets.resize(n, 4);
      data.targets.setRandom();
      CHECK(gradient_check(net, data, LossKind::kCde) < 1e-4);
    } else {
      cfg.output_dim = 1;
      cfg.head = OutputHead::kPerStepSigmoid;
      Network net(cfg);
      data.targets = (Eigen::MatrixXd::Random(n, cfg.history_u).array() > 0.0).cast<double>();
      CHECK(gradient_check(net, data, LossKind::kMaskedBce) < 1e-4);
    }
  }
}

TEST_CASE("gradient check: masked steps contribute zero gradient") {
  NetConfig cfg;
  cfg.input_dim = 1;
  cfg.history_u = 3;
  cfg.head = OutputHead::kPerStepSigmoid;
  cfg.output_dim = 1;
  cfg.seed = 15;
  Network net(cfg);
  SequenceBatch data = toy_regression(4, 3, 1, 29);
  data.targets = Eigen::MatrixXd::Zero(4, 3);
  data.mask = Eigen::MatrixXd::Zero(4, 3);  // everything masked
  Eigen::VectorXd g;
  net.loss_and_gradient(data, LossKind::kMaskedBce, g);
  CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cde loss decreases over the first epochs on a uniform toy") {
  // A | x uniform on [0,1]; targets are basis values of the draws.
  BasisSpec spec;
  spec.num_basis = 30;
  const int n = 512;
  auto rng = make_rng(31);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  SequenceBatch data;
  data.steps = 1;
  data.features = 2;
  data.inputs.resize(n, 2);
  data.targets.resize(n, spec.num_basis);
  for (int i = 0; i < n; ++i) {
    data.inputs(i, 0) = unif(rng);
    data.inputs(i, 1) = unif(rng);
    data.targets.row(i) = eval_basis_unit(spec, unif(rng)).transpose();
  }
  NetConfig cfg;
  cfg.input_dim = 2;
  cfg.history_u = 1;
  cfg.output_dim = spec.num_basis;
  cfg.epochs = 5;
  cfg.learning_rate = 0.01;
  cfg.seed = 1234;
  Network net(cfg);
  const TrainResult result = train(net, data, LossKind::kCde);
  REQUIRE(result.epoch_loss.size() == 6);
  for (std::size_t e = 1; e < result.epoch_loss.size(); ++e)
    CHECK(result.epoch_loss[e] < result.epoch_loss[e - 1]);
}

TEST_CASE("random search scores the base config and never regresses") {
  SequenceBatch data = toy_regression(64, 1, 1, 33, 1.5);
  NetConfig base;
  base.arch = Arch::kLinear;
  base.history_u = 1;
  base.input_dim = 1;
  base.output_dim = 1;
  base.epochs = 20;
  base.seed = 3;
  const TuningRanges ranges = TuningRanges::defaults(12, 8, 64);
  CHECK(ranges.batch_min == 64);
  CHECK(ranges.dense_units_max == 8);
  int calls = 0;
  const NetConfig best = random_search(base, ranges, 3, 7, [&](const NetConfig& cfg) {
    ++calls;
    NetConfig candidate = cfg;
    candidate.arch = Arch::kLinear;  // keep the toy cheap
    candidate.history_u = 1;         // the toy data has one step
    Network net(candidate);
    train(net, data, LossKind::kMse);
    return net.loss(data, LossKind::kMse);
  });
  CHECK(calls == 4);  // base + 3 candidates
  CHECK(best.epochs == base.epochs);
}
