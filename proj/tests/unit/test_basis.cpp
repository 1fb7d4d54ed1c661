#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "deepsdrf/basis.hpp"

using namespace deepsdrf;

namespace {

// Midpoint-rule Gram matrix of the basis; `cells` chosen so Haar
// breakpoints land on cell boundaries.
Eigen::MatrixXd gram(const BasisSpec& spec, int cells) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(spec.num_basis, spec.num_basis);
  for (int i = 0; i < cells; ++i) {
    const double z = (i + 0.5) / static_cast<double>(cells);
    const Eigen::VectorXd phi = eval_basis_unit(spec, z);
    g += phi * phi.transpose();
  }
  return g / static_cast<double>(cells);
}

}  // namespace

TEST_CASE("cosine basis fixtures") {
  BasisSpec spec;
  spec.num_basis = 5;
  const Eigen::VectorXd at0 = eval_basis_unit(spec, 0.0);
  CHECK(at0(0) == doctest::Approx(1.0));
  CHECK(at0(1) == doctest::Approx(std::sqrt(2.0)));  // phi_2(0) = sqrt(2)
  const Eigen::VectorXd at_half = eval_basis_unit(spec, 0.5);
  CHECK(at_half(1) == doctest::Approx(0.0).epsilon(1e-12));  // cos(pi/2)
}

TEST_CASE("cosine basis orthonormality under quadrature") {
  BasisSpec spec;
  spec.num_basis = 60;
  const Eigen::MatrixXd g = gram(spec, 10000);
  for (int j = 0; j < spec.num_basis; ++j)
    for (int k = 0; k < spec.num_basis; ++k)
      CHECK(std::abs(g(j, k) - (j == k ? 1.0 : 0.0)) < 1e-3);
}

TEST_CASE("haar basis fixture at z=0.3 with J=4") {
  BasisSpec spec;
  spec.kind = BasisKind::kHaar;
  spec.num_basis = 4;
  const Eigen::VectorXd phi = eval_basis_unit(spec, 0.3);
  CHECK(phi(0) == doctest::Approx(1.0));
  CHECK(phi(1) == doctest::Approx(1.0));                 // mother wavelet, z < 1/2
  CHECK(phi(2) == doctest::Approx(-std::sqrt(2.0)));     // level 1, shift 0: 2z = 0.6
  CHECK(phi(3) == doctest::Approx(0.0));                 // level 1, shift 1: out of support
}

TEST_CASE("haar basis orthonormality under quadrature") {
  BasisSpec spec;
  spec.kind = BasisKind::kHaar;
  spec.num_basis = 60;
  // Dyadic cell count keeps every Haar breakpoint on a cell boundary.
  const Eigen::MatrixXd g = gram(spec, 16384);
  for (int j = 0; j < spec.num_basis; ++j)
    for (int k = 0; k < spec.num_basis; ++k)
      CHECK(std::abs(g(j, k) - (j == k ? 1.0 : 0.0)) < 1e-3);
}

TEST_CASE("rescaling clips out-of-support doses to the boundary") {
  BasisSpec spec;
  spec.rescale_lo = 2.0;
  spec.rescale_hi = 4.0;
  CHECK(spec.to_unit(1.0) == doctest::Approx(0.0));
  CHECK(spec.to_unit(5.0) == doctest::Approx(1.0));
  CHECK(spec.to_unit(3.0) == doctest::Approx(0.5));
  const Eigen::VectorXd below = eval_basis(spec, 1.0);
  const Eigen::VectorXd at_lo = eval_basis(spec, 2.0);
  CHECK(below == at_lo);
}

TEST_CASE("basis spec validation") {
  BasisSpec bad;
  bad.num_basis = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  BasisSpec swapped;
  swapped.rescale_lo = 1.0;
  swapped.rescale_hi = 1.0;
  CHECK_THROWS_AS(swapped.validate(), std::invalid_argument);
}
