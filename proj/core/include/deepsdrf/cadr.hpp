#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "deepsdrf/dgp.hpp"
#include "deepsdrf/gps.hpp"
#include "deepsdrf/labels.hpp"
#include "deepsdrf/net.hpp"

namespace deepsdrf {

// Per-feature centering/scaling fitted on a training cohort. Features with
// (near) zero variance keep sd = 1 so constant columns map to zero.
struct Standardizer {
  Eigen::VectorXd mean;  // per covariate dimension
  Eigen::VectorXd sd;
  double treat_mean = 0.0;
  double treat_sd = 1.0;

  static Standardizer fit(const PatientPanel& panel);
  double covariate(double x, int d) const { return (x - mean(d)) / sd(d); }
  double treatment(double a) const { return (a - treat_mean) / treat_sd; }
};

enum class OutcomeKind { kDeepSdrf, kSnn };

// Ensemble of per-step hazard networks. DeepSDRF members consume, per step,
// the window of recent (dose, GPS density) pairs; SNN members consume the
// window of standardized covariates plus the standardized dose.
struct OutcomeEnsemble {
  std::vector<Network> members;
  OutcomeKind kind = OutcomeKind::kDeepSdrf;
  int window_h = 1;     // per-step feature window
  int label_steps = 0;  // q + 1
  Standardizer scaler;  // used by the SNN input map

  int ensemble_m() const { return static_cast<int>(members.size()); }
  int features_per_step() const {
    return kind == OutcomeKind::kDeepSdrf ? 2 * window_h : 0;  // snn set at fit
  }
};

// Survival curve estimate over t = 1..theta with ensemble dispersion.
struct CadrEstimate {
  Eigen::VectorXd survival_mean;
  Eigen::VectorXd survival_sd;
  Eigen::VectorXd ci_lo, ci_hi;  // 2.5 / 97.5 percentiles over the curve set
  double psi_bar = 0.0;          // time-average of the mean curve
};

// Batched curves, one row per patient.
struct CadrBatch {
  Eigen::MatrixXd mean, sd, lo, hi;  // n x theta
  Eigen::VectorXd psi_bar;           // n
  int theta = 0;
};

// Trains the outcome ensemble against the longitudinal labels (masked
// binary cross-entropy on the per-step hazards). `gps` is required for the
// DeepSDRF kind and ignored for the SNN; the per-step GPS feature is the
// ensemble-mean density at the observed dose given the covariate history.
OutcomeEnsemble fit_outcome(const PatientPanel& panel, const GpsEnsemble* gps,
                            const NetConfig& net_cfg, int ensemble_m, OutcomeKind kind,
                            int window_h);

// Counterfactual curve estimator for a cohort: the treatment is held fixed
// at the query dose over the whole follow-up. For DeepSDRF the estimate
// averages over all (outcome member, GPS member) pairs; the SNN averages
// over its members.
class CadrEstimator {
 public:
  CadrEstimator(const OutcomeEnsemble& outcome, const GpsEnsemble* gps,
                const PatientPanel& panel);

  CadrBatch estimate(double dose) const;
  CadrBatch estimate(const Eigen::VectorXd& per_patient_dose) const;
  // Mean survival-to-the-end table for a dose grid: psi_bar of every patient
  // at every grid dose (n x levels).
  Eigen::MatrixXd psi_bar_table(const std::vector<double>& doses) const;

  int n_patients() const { return panel_->n_patients; }
  int curves_per_patient() const;  // m * m for DeepSDRF, m for SNN

 private:
  CadrBatch estimate_impl(const Eigen::VectorXd& doses, bool common_dose,
                          double dose) const;

  const OutcomeEnsemble* outcome_;
  const GpsEnsemble* gps_;
  const PatientPanel* panel_;
  std::vector<GpsEvalCache> step_caches_;  // per step, DeepSDRF only
};

// Single-patient convenience wrapper over the batched estimator.
CadrEstimate estimate_cadr(const OutcomeEnsemble& outcome, const GpsEnsemble* gps,
                           const PatientPanel& panel, int patient, double dose);

}  // namespace deepsdrf
