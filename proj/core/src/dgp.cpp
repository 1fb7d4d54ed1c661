#include "deepsdrf/dgp.hpp"

#include <cmath>
#include <stdexcept>

namespace deepsdrf {

namespace {
constexpr double kExpMeanFloor = 1e-3;  // floor for the exponential dose mean
}

void DgpConfig::validate() const {
  if (n_patients < 1) throw std::invalid_argument("DgpConfig: n_patients must be >= 1");
  if (dim_d < 1) throw std::invalid_argument("DgpConfig: dim_d must be >= 1");
  if (variance_v < 0.0) throw std::invalid_argument("DgpConfig: variance_v must be >= 0");
  if (overlap_eta < 0.0 || overlap_eta > 1.0)
    throw std::invalid_argument("DgpConfig: overlap_eta must be in [0,1]");
  if (max_followup < 1) throw std::invalid_argument("DgpConfig: max_followup must be >= 1");
  if (history_h < 1) throw std::invalid_argument("DgpConfig: history_h must be >= 1");
}

void TruthOracle::validate() const {
  if (mode == TruthMode::kMonteCarloNormalX && !use_closed_form && mc_draws < 1000)
    throw std::invalid_argument("TruthOracle: mc_draws must be >= 1e3 in Monte Carlo mode");
}

double conditional_hazard_mean(double a, double x_sum) {
  return a + x_sum * std::exp(-a * x_sum);
}

double marginal_hazard_mean(double a, int dim_d) {
  if (a <= -1.0) throw std::invalid_argument("marginal_hazard_mean: requires a > -1");
  if (dim_d < 1) throw std::invalid_argument("marginal_hazard_mean: dim_d must be >= 1");
  return a + static_cast<double>(dim_d) / std::pow(a + 1.0, dim_d + 1);
}

double clamped_normal_mean(double mu) {
  // E[clamp(Z,0,1)] = mu*(Phi(1-mu) - Phi(-mu)) - phi(1-mu) + phi(-mu) + 1 - Phi(1-mu)
  const double c1 = norm_cdf(1.0 - mu);
  const double c0 = norm_cdf(-mu);
  return mu * (c1 - c0) - norm_pdf(1.0 - mu) + norm_pdf(-mu) + 1.0 - c1;
}

double clamped_normal_mean_mc(double mu, long draws, std::mt19937_64& rng) {
  if (draws < 1) throw std::invalid_argument("clamped_normal_mean_mc: draws must be >= 1");
  std::normal_distribution<double> noise(mu, 1.0);
  double acc = 0.0;
  for (long i = 0; i < draws; ++i) {
    double z = noise(rng);
    acc += std::min(1.0, std::max(0.0, z));
  }
  return acc / static_cast<double>(draws);
}

Eigen::MatrixXd gen_covariates(const DgpConfig& cfg) {
  cfg.validate();
  const int n_steps = cfg.max_followup + 1;
  Eigen::MatrixXd x(cfg.n_patients, n_steps * cfg.dim_d);
  auto rng = make_rng(derive_seed(cfg.seed, 0x636f76));
  std::normal_distribution<double> base(0.0, std::sqrt(cfg.variance_v));
  for (int i = 0; i < cfg.n_patients; ++i) {
    for (int d = 0; d < cfg.dim_d; ++d) x(i, d) = cfg.variance_v > 0.0 ? base(rng) : 0.0;
  }
  for (int t = 1; t < n_steps; ++t) {
    const double sqrt_t = std::sqrt(static_cast<double>(t));
    for (int i = 0; i < cfg.n_patients; ++i)
      for (int d = 0; d < cfg.dim_d; ++d)
        x(i, t * cfg.dim_d + d) = x(i, (t - 1) * cfg.dim_d + d) / sqrt_t;
  }
  return x;
}

Eigen::MatrixXd gen_treatment(const Eigen::MatrixXd& covariates, int dim_d,
                              double overlap_eta, std::uint64_t seed) {
  if (dim_d < 1 || covariates.cols() % dim_d != 0)
    throw std::invalid_argument("gen_treatment: covariate layout mismatch");
  const int n = static_cast<int>(covariates.rows());
  const int n_steps = static_cast<int>(covariates.cols()) / dim_d;
  Eigen::MatrixXd a(n, n_steps);
  auto rng = make_rng(derive_seed(seed, 0x747274));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < n_steps; ++t) {
      const double x_mean = covariates.row(i).segment(t * dim_d, dim_d).mean();
      const double mean_dose =
          std::max(kExpMeanFloor, overlap_eta * x_mean + (1.0 - overlap_eta) * 0.5);
      // Inverse-CDF exponential draw with mean `mean_dose`.
      double u = unif(rng);
      if (u >= 1.0) u = std::nextafter(1.0, 0.0);
      a(i, t) = -mean_dose * std::log1p(-u);
    }
  }
  return a;
}

OutcomeDraws gen_outcomes(const Eigen::MatrixXd& covariates,
                          const Eigen::MatrixXd& treatment, const DgpConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_patients;
  const int n_steps = cfg.max_followup + 1;
  if (covariates.rows() != n || treatment.rows() != n || treatment.cols() != n_steps)
    throw std::invalid_argument("gen_outcomes: inputs not aligned with config");

  OutcomeDraws out;
  out.event_time.assign(n, cfg.max_followup + 1);
  out.censor_time.assign(n, cfg.max_followup);
  out.event_flag.assign(n, 0);

  auto rng = make_rng(derive_seed(cfg.seed, 0x6f7574));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  for (int i = 0; i < n; ++i) {
    const double u_event = unif(rng);
    const double u_censor = unif(rng);

    double survival = 1.0;
    int event_at = cfg.max_followup + 1;
    for (int t = 0; t < n_steps; ++t) {
      const double x_sum = covariates.row(i).segment(t * cfg.dim_d, cfg.dim_d).sum();
      const double mu = conditional_hazard_mean(treatment(i, t), x_sum);
      double h = mu + noise(rng);
      h = std::min(1.0, std::max(0.0, h));
      survival *= 1.0 - h;
      if (survival < u_event) {
        event_at = t;
        break;
      }
    }
    out.event_time[i] = event_at;

    // Censoring survival C(t) = exp(-log(t)/lambda) is defined for t >= 1;
    // step 0 cannot censor.
    int censor_at = cfg.max_followup;
    for (int t = 1; t <= cfg.max_followup; ++t) {
      const double c = std::exp(-std::log(static_cast<double>(t)) / cfg.censor_lambda);
      if (c < u_censor) {
        censor_at = t;
        break;
      }
    }
    out.censor_time[i] = censor_at;
    out.event_flag[i] = out.event_time[i] <= out.censor_time[i] ? 1 : 0;
  }
  return out;
}

PatientPanel generate_panel(const DgpConfig& cfg) {
  cfg.validate();
  PatientPanel panel;
  panel.n_patients = cfg.n_patients;
  panel.dim_d = cfg.dim_d;
  panel.n_steps = cfg.max_followup + 1;
  panel.max_followup = cfg.max_followup;
  panel.covariates = gen_covariates(cfg);
  panel.treatment = gen_treatment(panel.covariates, cfg.dim_d, cfg.overlap_eta, cfg.seed);
  OutcomeDraws draws = gen_outcomes(panel.covariates, panel.treatment, cfg);
  panel.event_time = std::move(draws.event_time);
  panel.censor_time = std::move(draws.censor_time);
  panel.event_flag = std::move(draws.event_flag);
  return panel;
}

std::vector<double> true_cadr_curve(const std::vector<double>& x_sums, double a,
                                    const TruthOracle& oracle) {
  oracle.validate();
  std::vector<double> curve(x_sums.size());
  double survival = 1.0;
  std::mt19937_64 rng = make_rng(oracle.seed);
  for (std::size_t t = 0; t < x_sums.size(); ++t) {
    const double mu = conditional_hazard_mean(a, x_sums[t]);
    const double h = oracle.use_closed_form
                         ? clamped_normal_mean(mu)
                         : clamped_normal_mean_mc(mu, oracle.mc_draws, rng);
    survival *= 1.0 - h;
    curve[t] = survival;
  }
  return curve;
}

double true_cadr(int t, double a, const std::vector<double>& x_sums,
                 const TruthOracle& oracle) {
  if (t < 0 || static_cast<std::size_t>(t) >= x_sums.size())
    throw std::invalid_argument("true_cadr: t outside the covariate path");
  return true_cadr_curve(x_sums, a, oracle)[static_cast<std::size_t>(t)];
}

std::vector<double> x_sum_path(const PatientPanel& panel, int patient) {
  std::vector<double> path(panel.n_steps);
  for (int t = 0; t < panel.n_steps; ++t) path[t] = panel.x_sum(patient, t);
  return path;
}

Eigen::VectorXd gen_continuous_outcome(const Eigen::MatrixXd& covariates, int dim_d,
                                       const Eigen::VectorXd& treatment,
                                       std::uint64_t seed) {
  const int n = static_cast<int>(covariates.rows());
  if (treatment.size() != n)
    throw std::invalid_argument("gen_continuous_outcome: treatment length mismatch");
  Eigen::VectorXd y(n);
  auto rng = make_rng(derive_seed(seed, 0x636f6e));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const double x_sum = covariates.row(i).segment(0, dim_d).sum();
    y(i) = conditional_hazard_mean(treatment(i), x_sum) + noise(rng);
  }
  return y;
}

}  // namespace deepsdrf
