#pragma once

#include <Eigen/Dense>

namespace deepsdrf {

// Mean absolute percentage bias, excluding (and counting) entries whose
// true value is below the floor in magnitude. Throws when everything is
// excluded.
struct BiasResult {
  double value = 0.0;
  long included = 0;
  long excluded = 0;
};
BiasResult metric_bias(const Eigen::VectorXd& psi_hat, const Eigen::VectorXd& psi_true,
                       double floor = 1e-9);

// Fraction of entries whose absolute error lies inside the half-width of
// the 95% quantile band.
double metric_coverage(const Eigen::VectorXd& psi_hat, const Eigen::VectorXd& ci_lo,
                       const Eigen::VectorXd& ci_hi, const Eigen::VectorXd& psi_true);

// Mean squared error (reported without the square root; metric_rmse_sqrt
// gives the conventional root for readers).
double metric_rmse(const Eigen::VectorXd& psi_hat, const Eigen::VectorXd& psi_true);
double metric_rmse_sqrt(const Eigen::VectorXd& psi_hat, const Eigen::VectorXd& psi_true);

}  // namespace deepsdrf
