#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "deepsdrf/metrics.hpp"

using namespace deepsdrf;

TEST_CASE("bias: identity, scaling and the brute-force oracle") {
  Eigen::VectorXd truth(4);
  truth << 0.2, 0.5, 0.8, 1.0;
  CHECK(metric_bias(truth, truth).value == doctest::Approx(0.0));
  CHECK(metric_bias(1.1 * truth, truth).value == doctest::Approx(0.1).epsilon(1e-12));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  Eigen::VectorXd hat(7), tru(7);
  for (int i = 0; i < 7; ++i) {
    hat(i) = unif(rng);
    tru(i) = unif(rng);
  }
  double brute = 0.0;
  for (int i = 0; i < 7; ++i) brute += std::abs((hat(i) - tru(i)) / tru(i));
  brute /= 7.0;
  CHECK(metric_bias(hat, tru).value == doctest::Approx(brute).epsilon(1e-14));
}

TEST_CASE("bias: near-zero truths are excluded and counted") {
  Eigen::VectorXd hat(3), tru(3);
  hat << 1.0, 1.0, 1.0;
  tru << 0.0, 0.5, 1e-12;
  const BiasResult r = metric_bias(hat, tru);
  CHECK(r.included == 1);
  CHECK(r.excluded == 2);
  CHECK(r.value == doctest::Approx(1.0));  // |(1-0.5)/0.5|
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(metric_bias(hat, zero), std::invalid_argument);
}

TEST_CASE("coverage: trivial bands and the constructed half-in fixture") {
  const int n = 10;
  Eigen::VectorXd hat = Eigen::VectorXd::Constant(n, 0.5);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, 0.4);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, 0.6);
  CHECK(metric_coverage(hat, lo, hi, hat) == doctest::Approx(1.0));
  Eigen::VectorXd far = Eigen::VectorXd::Constant(n, 2.0);
  CHECK(metric_coverage(hat, lo, hi, far) == doctest::Approx(0.0));
  // Half inside: truth offset 0.05 (inside +-0.1) for five, 0.5 for five.
  Eigen::VectorXd mixed(n);
  for (int i = 0; i < n; ++i) mixed(i) = i < 5 ? 0.55 : 1.0;
  CHECK(metric_coverage(hat, lo, hi, mixed) == doctest::Approx(0.5));
}

TEST_CASE("rmse: printed-form mean squared error plus the conventional root") {
  Eigen::VectorXd a(5), b(5);
  a << 1, 2, 3, 4, 5;
  b = a;
  CHECK(metric_rmse(a, b) == doctest::Approx(0.0));
  b.array() += 0.1;
  CHECK(metric_rmse(a, b) == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(metric_rmse_sqrt(a, b) == doctest::Approx(0.1).epsilon(1e-9));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd hat(5), tru(5);
  for (int i = 0; i < 5; ++i) {
    hat(i) = unif(rng);
    tru(i) = unif(rng);
  }
  double brute = 0.0;
  for (int i = 0; i < 5; ++i) brute += (hat(i) - tru(i)) * (hat(i) - tru(i));
  brute /= 5.0;
  CHECK(metric_rmse(hat, tru) == doctest::Approx(brute).epsilon(1e-14));
}

TEST_CASE("metrics on perfect predictions return (0, 1, 0)") {
  Eigen::VectorXd psi(6);
  psi << 0.9, 0.8, 0.7, 0.6, 0.5, 0.4;
  Eigen::VectorXd lo = psi.array() - 0.05;
  Eigen::VectorXd hi = psi.array() + 0.05;
  CHECK(metric_bias(psi, psi).value == 0.0);
  CHECK(metric_coverage(psi, lo, hi, psi) == 1.0);
  CHECK(metric_rmse(psi, psi) == 0.0);
}
