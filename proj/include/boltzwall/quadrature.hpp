#pragma once

#include <functional>
#include <vector>

namespace boltzwall::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
Rule gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Adaptive Gauss-Kronrod (7/15) integration of a smooth integrand on [a, b].
/// Subdivides until the local error estimate is below rel_tol * |I| + abs_tol.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-12, double abs_tol = 0.0);

/// Integral over (0, b] of an integrand with an integrable power singularity
/// ~ c * x^p (p > -1) at the left endpoint. Geometric panels [b 2^{-k-1}, b 2^{-k}]
/// are integrated adaptively; the part below the last panel is closed with the
/// power-law tail estimated from the two smallest panels.
double integrate_left_singular(const std::function<double(double)>& f, double b,
                               double rel_tol = 1e-12);

/// Integral over [a, b] with a steep (possibly singular) profile at a > 0.
/// Panels are graded geometrically away from a and each is integrated adaptively.
double integrate_graded(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-12);

/// Golden-section minimization on [a, b]. Returns the argmin.
double golden_min(const std::function<double(double)>& f, double a, double b,
                  double tol = 1e-12);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace boltzwall::quad
