#include <cmath>
#include <numbers>

#include "boltzwall/common.hpp"
#include "boltzwall/quadrature.hpp"
#include "doctest.h"

using namespace boltzwall;

TEST_CASE("gauss-legendre integrates polynomials of degree 2n-1 exactly") {
  const auto r = quad::gauss_legendre(6, 0.0, 2.0);
  double s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], 11);
  CHECK(s == doctest::Approx(std::pow(2.0, 12) / 12.0).epsilon(1e-13));
  double w = 0.0;
  for (double x : r.weights) w += x;
  CHECK(w == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("adaptive integration of smooth and peaked integrands") {
  CHECK(quad::integrate([](double x) { return std::sin(x); }, 0.0, kPi) ==
        doctest::Approx(2.0).epsilon(1e-12));
  const double peak = quad::integrate([](double x) { return 1.0 / (1e-4 + x * x); }, -1.0, 1.0);
  CHECK(peak == doctest::Approx(2.0 / 1e-2 * std::atan(1.0 / 1e-2)).epsilon(1e-10));
}

TEST_CASE("left-singular integration matches power-law closed forms") {
  // int_0^1 x^{-0.9} dx = 10
  CHECK(quad::integrate_left_singular([](double x) { return std::pow(x, -0.9); }, 1.0, 1e-12) ==
        doctest::Approx(10.0).epsilon(1e-9));
  // int_0^2 x^{0.5} dx = (2/3) 2^{1.5}
  CHECK(quad::integrate_left_singular([](double x) { return std::sqrt(x); }, 2.0) ==
        doctest::Approx(2.0 / 3.0 * std::pow(2.0, 1.5)).epsilon(1e-10));
}

TEST_CASE("graded integration of a steep integrand") {
  // int_eps^1 x^{-2.5} dx = (eps^{-1.5} - 1)/1.5
  const double eps = 1e-5;
  const double v = quad::integrate_graded([](double x) { return std::pow(x, -2.5); }, eps, 1.0);
  CHECK(v == doctest::Approx((std::pow(eps, -1.5) - 1.0) / 1.5).epsilon(1e-10));
}

TEST_CASE("golden-section and slope fit") {
  CHECK(quad::golden_min([](double x) { return (x - 0.3) * (x - 0.3); }, 0.0, 1.0) ==
        doctest::Approx(0.3).epsilon(1e-8));
  CHECK(quad::fit_slope({0, 1, 2, 3}, {1, 3, 5, 7}) == doctest::Approx(2.0));
}

TEST_CASE("ball and sphere measures") {
  CHECK(unit_ball_volume(2) == doctest::Approx(kPi));
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * kPi / 3.0));
  CHECK(sphere_measure(0) == doctest::Approx(2.0));
  CHECK(sphere_measure(1) == doctest::Approx(2.0 * kPi));
  CHECK(sphere_measure(2) == doctest::Approx(4.0 * kPi));
}
