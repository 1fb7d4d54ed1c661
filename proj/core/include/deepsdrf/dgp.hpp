#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "deepsdrf/common.hpp"

namespace deepsdrf {

// Configuration of the synthetic longitudinal cohort generator.
struct DgpConfig {
  int n_patients = 3000;
  int dim_d = 8;             // covariate dimension D
  double variance_v = 0.5;   // variance of the baseline normal covariates
  double overlap_eta = 0.5;  // 0 = unconfounded assignment, 1 = fully covariate-driven
  int max_followup = 12;     // follow-up horizon (time steps 0..max_followup)
  double censor_lambda = 30.0;
  int history_h = 1;         // history window length used by downstream models
  std::uint64_t seed = 0;

  void validate() const;
};

// A simulated cohort. Time runs t = 0..max_followup inclusive; events may
// occur at any step, the no-event sentinel is max_followup + 1 and the
// no-censor sentinel is max_followup.
struct PatientPanel {
  int n_patients = 0;
  int dim_d = 0;
  int n_steps = 0;  // max_followup + 1 time points
  int max_followup = 0;
  Eigen::MatrixXd covariates;  // n x (n_steps * D), step-major: col t*D + d
  Eigen::MatrixXd treatment;   // n x n_steps
  std::vector<int> event_time;
  std::vector<int> censor_time;
  std::vector<std::uint8_t> event_flag;  // Y = I(event_time <= censor_time)

  int observed_time(int i) const { return std::min(event_time[i], censor_time[i]); }
  double covariate(int i, int t, int d) const { return covariates(i, t * dim_d + d); }
  // Sum of the covariate vector of patient i at step t.
  double x_sum(int i, int t) const {
    return covariates.row(i).segment(t * dim_d, dim_d).sum();
  }
};

enum class TruthMode { kAnalyticExponentialX, kMonteCarloNormalX };

// Ground-truth dose-response oracle. The Monte Carlo mode estimates the
// clamped-hazard expectation by sampling the unit-variance hazard noise;
// the default path evaluates the same expectation in closed form.
struct TruthOracle {
  TruthMode mode = TruthMode::kMonteCarloNormalX;
  long mc_draws = 100000;
  bool use_closed_form = true;  // closed-form clamped-normal mean instead of sampling
  std::uint64_t seed = 12345;

  void validate() const;
};

// Mean of the hazard noise distribution at dose a given covariate sum:
// a + x_sum * exp(-a * x_sum).
double conditional_hazard_mean(double a, double x_sum);

// Marginal hazard mean under unit-exponential covariates:
// a + D / (a+1)^(D+1). Requires a > -1.
double marginal_hazard_mean(double a, int dim_d);

// E[clamp(Z, 0, 1)] for Z ~ N(mu, 1), exact (truncated-normal algebra).
double clamped_normal_mean(double mu);
// Same expectation by Monte Carlo; retained as an independent check of the
// closed form and selectable through TruthOracle.
double clamped_normal_mean_mc(double mu, long draws, std::mt19937_64& rng);

// Baseline covariates X(0)_d ~ N(0, V) i.i.d., decayed as
// X(t) = X(t-1) / sqrt(t) for t >= 1.
Eigen::MatrixXd gen_covariates(const DgpConfig& cfg);

// Per-step doses A(t) ~ Exponential with mean
// clamp(eta * mean_d X(t) + (1 - eta) * 0.5, 1e-3, inf).
Eigen::MatrixXd gen_treatment(const Eigen::MatrixXd& covariates, int dim_d,
                              double overlap_eta, std::uint64_t seed);

struct OutcomeDraws {
  std::vector<int> event_time;
  std::vector<int> censor_time;
  std::vector<std::uint8_t> event_flag;
};

// Hazards h(t) ~ N(conditional mean, 1) clamped to [0,1]; the event time is
// the first step where the running survival product crosses a uniform draw
// (no-event sentinel max_followup + 1). Censor times come from
// C(t) = exp(-log(t)/lambda) the same way (no-censor sentinel max_followup).
OutcomeDraws gen_outcomes(const Eigen::MatrixXd& covariates,
                          const Eigen::MatrixXd& treatment, const DgpConfig& cfg);

// Full cohort: covariates, treatment, outcomes.
PatientPanel generate_panel(const DgpConfig& cfg);

// True survival CADR at fixed dose a for a patient with covariate-sum path
// x_sums (index j = time step): prod_{j<=t} (1 - E[clamp(h(j,a),0,1)]).
// Returns values for t = 0..x_sums.size()-1.
std::vector<double> true_cadr_curve(const std::vector<double>& x_sums, double a,
                                    const TruthOracle& oracle);
// Single point, t <= x_sums.size()-1.
double true_cadr(int t, double a, const std::vector<double>& x_sums,
                 const TruthOracle& oracle);

// Covariate-sum path of a patient, one value per step.
std::vector<double> x_sum_path(const PatientPanel& panel, int patient);

// Continuous-outcome mode: Y | X ~ N(a + sum(x) * exp(-a * sum(x)), 1),
// one draw per patient using the dose at step 0.
Eigen::VectorXd gen_continuous_outcome(const Eigen::MatrixXd& covariates, int dim_d,
                                       const Eigen::VectorXd& treatment,
                                       std::uint64_t seed);

}  // namespace deepsdrf
