#include "deepsdrf/cadr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "deepsdrf/common.hpp"

namespace deepsdrf {

namespace {
constexpr double kSdFloor = 1e-12;
}

Standardizer Standardizer::fit(const PatientPanel& panel) {
  Standardizer s;
  s.mean.setZero(panel.dim_d);
  s.sd.setOnes(panel.dim_d);

  // Statistics over the observed cells only (up to each patient's exit).
  long cells = 0;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(panel.dim_d);
  Eigen::VectorXd acc2 = Eigen::VectorXd::Zero(panel.dim_d);
  double ta = 0.0, ta2 = 0.0;
  for (int i = 0; i < panel.n_patients; ++i) {
    const int last = std::min(panel.observed_time(i), panel.max_followup);
    for (int t = 0; t <= last; ++t) {
      const auto x = panel.covariates.row(i).segment(t * panel.dim_d, panel.dim_d);
      acc += x.transpose();
      acc2 += x.array().square().matrix().transpose();
      const double a = panel.treatment(i, t);
      ta += a;
      ta2 += a * a;
      ++cells;
    }
  }
  if (cells == 0) throw std::invalid_argument("Standardizer::fit: no observed cells");
  const double n = static_cast<double>(cells);
  s.mean = acc / n;
  for (int d = 0; d < panel.dim_d; ++d) {
    const double var = acc2(d) / n - s.mean(d) * s.mean(d);
    s.sd(d) = var > kSdFloor ? std::sqrt(var) : 1.0;
  }
  s.treat_mean = ta / n;
  const double tvar = ta2 / n - s.treat_mean * s.treat_mean;
  s.treat_sd = tvar > kSdFloor ? std::sqrt(tvar) : 1.0;
  return s;
}

namespace {

// Per-step windowed (dose, density) features: for step t the last
// `window_h` doses then the last `window_h` densities, zero-padded before
// the start of follow-up.
Eigen::MatrixXd deepsdrf_inputs(const Eigen::MatrixXd& doses,
                                const Eigen::MatrixXd& densities, int window_h) {
  const int n = static_cast<int>(doses.rows());
  const int steps = static_cast<int>(doses.cols());
  const int f = 2 * window_h;
  Eigen::MatrixXd inputs = Eigen::MatrixXd::Zero(n, steps * f);
  for (int t = 0; t < steps; ++t) {
    for (int k = 0; k < window_h; ++k) {
      const int src = t - window_h + 1 + k;
      if (src < 0) continue;
      inputs.col(t * f + k) = doses.col(src);
      inputs.col(t * f + window_h + k) = densities.col(src);
    }
  }
  return inputs;
}

// Standardized covariate + dose windows for the SNN.
Eigen::MatrixXd snn_inputs(const PatientPanel& panel, const Eigen::MatrixXd& doses,
                           const Standardizer& scaler, int window_h) {
  const int n = panel.n_patients;
  const int steps = static_cast<int>(doses.cols());
  const int d = panel.dim_d;
  const int f = (d + 1) * window_h;
  Eigen::MatrixXd inputs = Eigen::MatrixXd::Zero(n, steps * f);
  for (int t = 0; t < steps; ++t) {
    for (int k = 0; k < window_h; ++k) {
      const int src = t - window_h + 1 + k;
      if (src < 0) continue;
      for (int i = 0; i < n; ++i) {
        for (int dd = 0; dd < d; ++dd)
          inputs(i, t * f + k * d + dd) =
              scaler.covariate(panel.covariate(i, src, dd), dd);
        inputs(i, t * f + window_h * d + k) = scaler.treatment(doses(i, src));
      }
    }
  }
  return inputs;
}

// Ensemble-mean GPS density at the observed dose of every (patient, step).
Eigen::MatrixXd observed_density_features(const PatientPanel& panel,
                                          const GpsEnsemble& gps) {
  Eigen::MatrixXd gvals(panel.n_patients, panel.n_steps);
  for (int t = 0; t < panel.n_steps; ++t) {
    WindowBatch windows = covariate_windows_at(panel, gps.history_u, t);
    GpsEvalCache cache = build_gps_cache(gps, windows);
    gvals.col(t) = gps_cache_density_mean(cache, panel.treatment.col(t));
  }
  return gvals;
}

}  // namespace

OutcomeEnsemble fit_outcome(const PatientPanel& panel, const GpsEnsemble* gps,
                            const NetConfig& net_cfg, int ensemble_m, OutcomeKind kind,
                            int window_h) {
  if (panel.n_patients < 1) throw std::invalid_argument("fit_outcome: empty panel");
  if (ensemble_m < 1) throw std::invalid_argument("fit_outcome: ensemble_m must be >= 1");
  if (window_h < 1) throw std::invalid_argument("fit_outcome: window_h must be >= 1");
  if (kind == OutcomeKind::kDeepSdrf && gps == nullptr)
    throw std::invalid_argument("fit_outcome: DeepSDRF requires a fitted GPS ensemble");

  OutcomeEnsemble ens;
  ens.kind = kind;
  ens.window_h = window_h;
  ens.label_steps = panel.max_followup + 1;
  ens.scaler = Standardizer::fit(panel);

  const int q = panel.max_followup;
  SequenceBatch data;
  data.steps = ens.label_steps;
  data.targets.setZero(panel.n_patients, ens.label_steps);
  data.mask.setZero(panel.n_patients, ens.label_steps);
  for (int i = 0; i < panel.n_patients; ++i) {
    const LabelMatrix label = build_labels(panel.event_time[i], panel.censor_time[i],
                                           panel.event_flag[i] != 0, q);
    for (int t = 0; t <= q; ++t) {
      data.targets(i, t) = label.gamma[static_cast<std::size_t>(t)];
      data.mask(i, t) = label.theta[static_cast<std::size_t>(t)];
    }
  }

  if (kind == OutcomeKind::kDeepSdrf) {
    const Eigen::MatrixXd gvals = observed_density_features(panel, *gps);
    data.inputs = deepsdrf_inputs(panel.treatment, gvals, window_h);
    data.features = 2 * window_h;
  } else {
    data.inputs = snn_inputs(panel, panel.treatment, ens.scaler, window_h);
    data.features = (panel.dim_d + 1) * window_h;
  }

  NetConfig member_cfg = net_cfg;
  member_cfg.history_u = ens.label_steps;
  member_cfg.input_dim = data.features;
  member_cfg.output_dim = 1;
  member_cfg.head = OutputHead::kPerStepSigmoid;
  member_cfg.arch = Arch::kRecurrent;

  ens.members.reserve(static_cast<std::size_t>(ensemble_m));
  for (int k = 0; k < ensemble_m; ++k) {
    member_cfg.seed =
        derive_seed(net_cfg.seed, 0x6f7574ULL + static_cast<std::uint64_t>(k));
    Network member(member_cfg);
    train(member, data, LossKind::kMaskedBce);
    ens.members.push_back(std::move(member));
  }
  return ens;
}

CadrEstimator::CadrEstimator(const OutcomeEnsemble& outcome, const GpsEnsemble* gps,
                             const PatientPanel& panel)
    : outcome_(&outcome), gps_(gps), panel_(&panel) {
  if (outcome.kind == OutcomeKind::kDeepSdrf) {
    if (gps == nullptr)
      throw std::invalid_argument("CadrEstimator: DeepSDRF requires a GPS ensemble");
    step_caches_.reserve(static_cast<std::size_t>(panel.n_steps));
    for (int t = 0; t < panel.n_steps; ++t) {
      WindowBatch windows = covariate_windows_at(panel, gps->history_u, t);
      step_caches_.push_back(build_gps_cache(*gps, windows));
    }
  }
}

int CadrEstimator::curves_per_patient() const {
  const int m = outcome_->ensemble_m();
  return outcome_->kind == OutcomeKind::kDeepSdrf ? m * gps_->ensemble_m() : m;
}

CadrBatch CadrEstimator::estimate(double dose) const {
  return estimate_impl(Eigen::VectorXd(), true, dose);
}

CadrBatch CadrEstimator::estimate(const Eigen::VectorXd& per_patient_dose) const {
  if (per_patient_dose.size() != panel_->n_patients)
    throw std::invalid_argument("CadrEstimator: dose vector length mismatch");
  return estimate_impl(per_patient_dose, false, 0.0);
}

CadrBatch CadrEstimator::estimate_impl(const Eigen::VectorXd& doses, bool common_dose,
                                       double dose) const {
  const int n = panel_->n_patients;
  const int steps = outcome_->label_steps;
  const int theta = panel_->max_followup;  // curves reported for t = 1..theta
  const int m_out = outcome_->ensemble_m();
  const int n_gps = outcome_->kind == OutcomeKind::kDeepSdrf ? gps_->ensemble_m() : 1;
  const int pairs = m_out * n_gps;

  Eigen::MatrixXd dose_steps(n, steps);
  for (int t = 0; t < steps; ++t)
    dose_steps.col(t) = common_dose ? Eigen::VectorXd::Constant(n, dose) : doses;

  // All curves, sliced to t = 1..theta: curves[p] is n x theta.
  std::vector<Eigen::MatrixXd> curves;
  curves.reserve(static_cast<std::size_t>(pairs));

  SequenceBatch batch;
  batch.steps = steps;
  for (int g = 0; g < n_gps; ++g) {
    if (outcome_->kind == OutcomeKind::kDeepSdrf) {
      Eigen::MatrixXd gvals(n, steps);
      for (int t = 0; t < steps; ++t) {
        const GpsEvalCache& cache = step_caches_[static_cast<std::size_t>(t)];
        gvals.col(t) = common_dose ? gps_cache_density(cache, g, dose)
                                   : gps_cache_density(cache, g, doses);
      }
      batch.inputs = deepsdrf_inputs(dose_steps, gvals, outcome_->window_h);
      batch.features = 2 * outcome_->window_h;
    } else {
      batch.inputs = snn_inputs(*panel_, dose_steps, outcome_->scaler, outcome_->window_h);
      batch.features = (panel_->dim_d + 1) * outcome_->window_h;
    }
    for (int k = 0; k < m_out; ++k) {
      const Eigen::MatrixXd hazards =
          outcome_->members[static_cast<std::size_t>(k)].forward(batch);
      Eigen::MatrixXd curve(n, theta);
      for (int i = 0; i < n; ++i) {
        double s = 1.0 - hazards(i, 0);  // survival through step 0
        for (int t = 1; t <= theta; ++t) {
          s *= 1.0 - hazards(i, t);
          curve(i, t - 1) = s;
        }
      }
      curves.push_back(std::move(curve));
    }
  }

  CadrBatch out;
  out.theta = theta;
  out.mean.setZero(n, theta);
  out.sd.setZero(n, theta);
  out.lo.setZero(n, theta);
  out.hi.setZero(n, theta);
  out.psi_bar.setZero(n);

  std::vector<double> cell(static_cast<std::size_t>(pairs));
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < theta; ++t) {
      double acc = 0.0, acc2 = 0.0;
      for (int p = 0; p < pairs; ++p) {
        const double v = curves[static_cast<std::size_t>(p)](i, t);
        cell[static_cast<std::size_t>(p)] = v;
        acc += v;
        acc2 += v * v;
      }
      const double mu = acc / pairs;
      out.mean(i, t) = mu;
      // Population variance over the curve set: a singleton set has sd 0.
      out.sd(i, t) = std::sqrt(std::max(0.0, acc2 / pairs - mu * mu));
      out.lo(i, t) = percentile(cell, 2.5);
      out.hi(i, t) = percentile(cell, 97.5);
    }
    out.psi_bar(i) = out.mean.row(i).mean();
  }
  return out;
}

Eigen::MatrixXd CadrEstimator::psi_bar_table(const std::vector<double>& doses) const {
  Eigen::MatrixXd table(panel_->n_patients, static_cast<Eigen::Index>(doses.size()));
  for (std::size_t c = 0; c < doses.size(); ++c) {
    const CadrBatch batch = estimate(doses[c]);
    table.col(static_cast<Eigen::Index>(c)) = batch.psi_bar;
  }
  return table;
}

CadrEstimate estimate_cadr(const OutcomeEnsemble& outcome, const GpsEnsemble* gps,
                           const PatientPanel& panel, int patient, double dose) {
  if (patient < 0 || patient >= panel.n_patients)
    throw std::invalid_argument("estimate_cadr: patient out of range");
  CadrEstimator estimator(outcome, gps, panel);
  const CadrBatch batch = estimator.estimate(dose);
  CadrEstimate est;
  est.survival_mean = batch.mean.row(patient).transpose();
  est.survival_sd = batch.sd.row(patient).transpose();
  est.ci_lo = batch.lo.row(patient).transpose();
  est.ci_hi = batch.hi.row(patient).transpose();
  est.psi_bar = batch.psi_bar(patient);
  return est;
}

}  // namespace deepsdrf
