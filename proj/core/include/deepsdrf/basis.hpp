#pragma once

#include <Eigen/Dense>

namespace deepsdrf {

enum class BasisKind { kCosine, kHaar };

// Orthonormal basis on [0,1] plus the affine rescaling of the treatment
// support onto it. num_basis defaults to the midpoint of the usual [30,60]
// tuning range; eval accepts any J >= 1.
struct BasisSpec {
  BasisKind kind = BasisKind::kCosine;
  int num_basis = 45;
  double rescale_lo = 0.0;
  double rescale_hi = 1.0;

  void validate() const;
  double to_unit(double a) const;    // clips to [lo, hi], maps to [0,1]
  double width() const { return rescale_hi - rescale_lo; }
};

// Basis values at a raw treatment value (clipped to the rescale bounds).
// Cosine: phi_1 = 1, phi_{j+1}(z) = sqrt(2) cos(pi j z).
// Haar: phi_1 = 1, then the standard dyadic Haar wavelets.
Eigen::VectorXd eval_basis(const BasisSpec& spec, double a);

// Basis values at a point already on the unit interval.
Eigen::VectorXd eval_basis_unit(const BasisSpec& spec, double z);

// Rows = uniformly spaced unit-interval grid points (z = i/(n-1)),
// cols = basis functions. Used for quadrature and density normalization.
Eigen::MatrixXd basis_matrix(const BasisSpec& spec, int grid_points);

}  // namespace deepsdrf
