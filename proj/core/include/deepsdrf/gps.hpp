#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "deepsdrf/basis.hpp"
#include "deepsdrf/dgp.hpp"
#include "deepsdrf/net.hpp"

namespace deepsdrf {

// Net inputs for a set of (patient, step) anchors: the covariate history
// window ending at the anchor step, left-aligned in time with the unfilled
// tail masked out.
struct WindowBatch {
  Eigen::MatrixXd inputs;  // n x (u * D)
  Eigen::MatrixXd mask;    // n x u (prefix mask)
};

WindowBatch covariate_windows(const PatientPanel& panel, int history_u,
                              const std::vector<std::pair<int, int>>& anchors);
// All patients at a fixed step.
WindowBatch covariate_windows_at(const PatientPanel& panel, int history_u, int step);

// Ensemble conditional density estimate of the dose assignment:
// each member maps a covariate window to basis coefficients beta(x); the
// density is the clipped, renormalized basis expansion, averaged over
// members. Immutable after fitting; safe for concurrent reads.
struct GpsEnsemble {
  std::vector<Network> members;
  BasisSpec basis;              // rescale bounds set from the fitted cohort
  double coef_threshold = 0.0;  // small non-constant coefficients are zeroed
  int history_u = 1;
  int dim_d = 0;
  int norm_cells = 1024;  // midpoint cells for the normalization integral

  int ensemble_m() const { return static_cast<int>(members.size()); }
};

// Running tallies a caller may pass to record boundary clipping.
struct GpsQueryStats {
  long clipped_to_support = 0;  // queries outside [lo, hi], clipped
  long degenerate_members = 0;  // members whose expansion was nonpositive everywhere
};

// Trains m coefficient networks on all observed (patient, step) doses with
// the CDE loss. The coefficient threshold (scale / sqrt(n_samples), applied
// to the non-constant coefficients at evaluation) suppresses estimation
// noise in the expansion tail.
GpsEnsemble fit_gps(const PatientPanel& panel, const BasisSpec& spec,
                    const NetConfig& net_cfg, int ensemble_m,
                    double coef_threshold_scale = 2.5);

// Thresholded coefficients of member k for a batch of windows (n x J).
Eigen::MatrixXd gps_member_coefficients(const GpsEnsemble& ens, int member,
                                        const WindowBatch& windows);

// Density normalizers: integral of the clipped expansion over the unit
// interval, one per row of `coefs`.
Eigen::VectorXd gps_member_normalizers(const GpsEnsemble& ens,
                                       const Eigen::MatrixXd& coefs);

// Precomputed per-member coefficients and normalizers for a fixed set of
// windows; doses can then be swept cheaply.
struct GpsEvalCache {
  const GpsEnsemble* ens = nullptr;
  std::vector<Eigen::MatrixXd> coefs;  // per member: n x J
  std::vector<Eigen::VectorXd> norms;  // per member: n

  int rows() const { return coefs.empty() ? 0 : static_cast<int>(coefs[0].rows()); }
};

GpsEvalCache build_gps_cache(const GpsEnsemble& ens, const WindowBatch& windows);

// Density of one member at a common dose (or per-row doses) for every row.
Eigen::VectorXd gps_cache_density(const GpsEvalCache& cache, int member, double a,
                                  GpsQueryStats* stats = nullptr);
Eigen::VectorXd gps_cache_density(const GpsEvalCache& cache, int member,
                                  const Eigen::VectorXd& a,
                                  GpsQueryStats* stats = nullptr);
// Ensemble mean density.
Eigen::VectorXd gps_cache_density_mean(const GpsEvalCache& cache, double a,
                                       GpsQueryStats* stats = nullptr);
Eigen::VectorXd gps_cache_density_mean(const GpsEvalCache& cache,
                                       const Eigen::VectorXd& a,
                                       GpsQueryStats* stats = nullptr);

// Single-query ensemble density for one covariate window.
double estimate_gps(const GpsEnsemble& ens, double a, const WindowBatch& window,
                    GpsQueryStats* stats = nullptr);

// Share of patients with near-zero density at representative doses, per
// treatment tertile (the overlap diagnostic).
struct OverlapReport {
  struct Band {
    double lo = 0.0, hi = 0.0;
    double median_dose = 0.0;
    double frac_below_threshold = 0.0;
    int count = 0;
  };
  std::vector<Band> bands;
  double threshold = 0.01;
  bool degenerate = false;  // single-valued treatment distribution
};

OverlapReport overlap_report(const GpsEnsemble& ens, const PatientPanel& panel,
                             int n_bands = 3, double threshold = 0.01);

}  // namespace deepsdrf
