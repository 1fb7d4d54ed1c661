#include "deepsdrf/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace deepsdrf {

namespace {
void check_aligned(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() == 0)
    throw std::invalid_argument("metrics: vectors must be aligned and nonempty");
}
}  // namespace

BiasResult metric_bias(const Eigen::VectorXd& psi_hat, const Eigen::VectorXd& psi_true,
                       double floor) {
  check_aligned(psi_hat, psi_true);
  BiasResult out;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < psi_hat.size(); ++i) {
    if (std::abs(psi_true(i)) < floor) {
      ++out.excluded;
      continue;
    }
    acc += std::abs((psi_hat(i) - psi_true(i)) / psi_true(i));
    ++out.included;
  }
  if (out.included == 0)
    throw std::invalid_argument("metric_bias: all entries below the truth floor");
  out.value = acc / static_cast<double>(out.included);
  return out;
}

double metric_coverage(const Eigen::VectorXd& psi_hat, const Eigen::VectorXd& ci_lo,
                       const Eigen::VectorXd& ci_hi, const Eigen::VectorXd& psi_true) {
  check_aligned(psi_hat, psi_true);
  check_aligned(ci_lo, ci_hi);
  check_aligned(psi_hat, ci_lo);
  long inside = 0;
  for (Eigen::Index i = 0; i < psi_hat.size(); ++i) {
    const double half_width = 0.5 * (ci_hi(i) - ci_lo(i));
    if (std::abs(psi_hat(i) - psi_true(i)) < half_width) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(psi_hat.size());
}

double metric_rmse(const Eigen::VectorXd& psi_hat, const Eigen::VectorXd& psi_true) {
  check_aligned(psi_hat, psi_true);
  return (psi_hat - psi_true).squaredNorm() / static_cast<double>(psi_hat.size());
}

double metric_rmse_sqrt(const Eigen::VectorXd& psi_hat, const Eigen::VectorXd& psi_true) {
  return std::sqrt(metric_rmse(psi_hat, psi_true));
}

}  // namespace deepsdrf
