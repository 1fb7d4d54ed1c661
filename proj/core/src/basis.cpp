#include "deepsdrf/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace deepsdrf {

void BasisSpec::validate() const {
  if (num_basis < 1) throw std::invalid_argument("BasisSpec: num_basis must be >= 1");
  if (!(rescale_lo < rescale_hi))
    throw std::invalid_argument("BasisSpec: rescale_lo must be < rescale_hi");
}

double BasisSpec::to_unit(double a) const {
  const double clipped = std::min(rescale_hi, std::max(rescale_lo, a));
  return (clipped - rescale_lo) / width();
}

namespace {

// Mother Haar wavelet: 1 on [0, 1/2), -1 on [1/2, 1), 0 elsewhere.
double haar_mother(double x) {
  if (x < 0.0 || x >= 1.0) return 0.0;
  return x < 0.5 ? 1.0 : -1.0;
}

}  // namespace

Eigen::VectorXd eval_basis_unit(const BasisSpec& spec, double z) {
  spec.validate();
  Eigen::VectorXd phi(spec.num_basis);
  if (spec.kind == BasisKind::kCosine) {
    static const double kSqrt2 = std::sqrt(2.0);
    phi(0) = 1.0;
    for (int j = 1; j < spec.num_basis; ++j)
      phi(j) = kSqrt2 * std::cos(M_PI * static_cast<double>(j) * z);
  } else {
    phi(0) = 1.0;
    for (int j = 1; j < spec.num_basis; ++j) {
      // j-th wavelet (1-based index p) lives at level n = floor(log2 p),
      // shift k = p - 2^n.
      const int p = j;
      const int level = static_cast<int>(std::floor(std::log2(static_cast<double>(p))));
      const double scale = std::pow(2.0, level);
      const double shift = static_cast<double>(p) - scale;
      phi(j) = std::sqrt(scale) * haar_mother(scale * z - shift);
    }
  }
  return phi;
}

Eigen::VectorXd eval_basis(const BasisSpec& spec, double a) {
  return eval_basis_unit(spec, spec.to_unit(a));
}

Eigen::MatrixXd basis_matrix(const BasisSpec& spec, int grid_points) {
  if (grid_points < 2) throw std::invalid_argument("basis_matrix: need >= 2 grid points");
  Eigen::MatrixXd m(grid_points, spec.num_basis);
  for (int i = 0; i < grid_points; ++i) {
    const double z = static_cast<double>(i) / static_cast<double>(grid_points - 1);
    m.row(i) = eval_basis_unit(spec, z).transpose();
  }
  return m;
}

}  // namespace deepsdrf
