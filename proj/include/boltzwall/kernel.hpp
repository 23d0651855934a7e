#pragma once

#include <string>
#include <utility>
#include <vector>

#include "boltzwall/common.hpp"

namespace boltzwall {

/// Kinetic part Phi(|z|) of the collision kernel.
/// Power form: Phi(z) = C_phi |z|^gamma. Mollified form: Phi(z) = C_phi for
/// |z| <= 1 and C_phi |z|^gamma beyond. c_phi is the certified lower constant.
struct KineticPotential {
  enum class Form { Power, Mollified };

  Form form = Form::Power;
  double gamma = 0.0;
  double c_phi = 1.0;
  double C_phi = 1.0;

  static KineticPotential power(double gamma, double c_phi = 1.0, double C_phi = 1.0);
  static KineticPotential mollified(double gamma, double c_phi = 1.0, double C_phi = 1.0);

  /// Throws InvalidArgument for z = 0 with the power form and gamma < 0.
  double eval(double z) const;
  double gamma_plus() const { return gamma > 0.0 ? gamma : 0.0; }
};

/// Angular part b(cos theta), theta in [0, pi], with optional truncation at eps.
class AngularKernel {
 public:
  enum class Family { Constant, Singular };
  enum class Side { Full, CO, NCO };

  static AngularKernel constant(double value, int d = 2);
  /// b(cos theta) = b0 theta^{-(1+nu)} / sin^{d-2}(theta) * W(theta), with
  /// W = 1 on (0, pi/2] and W = sin^2(theta) on [pi/2, pi].
  static AngularKernel singular(double nu, double b0, int d = 2);

  /// Truncated copy. CO keeps theta >= eps, NCO keeps theta < eps.
  AngularKernel truncated(double eps, Side side) const;

  double eval(double theta) const;
  double eval_untruncated(double theta) const;

  Family family() const { return family_; }
  Side side() const { return side_; }
  double eps() const { return eps_; }
  double nu() const { return nu_; }
  double b0() const { return b0_; }
  double value() const { return value_; }
  int dim() const { return d_; }

  /// True when the sphere integral of b is finite.
  bool integrable() const;
  std::string describe() const;

 private:
  AngularKernel() = default;

  Family family_ = Family::Constant;
  Side side_ = Side::Full;
  double value_ = 1.0;
  double nu_ = 0.0;
  double b0_ = 1.0;
  double eps_ = 0.0;
  int d_ = 2;
};

struct CollisionKernel {
  KineticPotential phi;
  AngularKernel b = AngularKernel::constant(1.0);
};

struct KernelConstants {
  double n_b = 0.0;
  double l_b = 0.0;
  double m_b = 0.0;
  int d = 2;
};

/// |S^{d-2}| int_0^pi b sin^{d-2}. Throws InvalidArgument when divergent.
double compute_n_b(const AngularKernel& b);
/// |S^{d-2}| int_0^pi b (1 - cos) sin^{d-2}.
double compute_m_b(const AngularKernel& b);
/// inf of b over [pi/4, 3pi/4].
double compute_l_b(const AngularKernel& b);

KernelConstants kernel_constants(const AngularKernel& b);

/// Splits b at eps into (CO, NCO) parts. Requires 0 < eps < pi/4.
std::pair<AngularKernel, AngularKernel> split_at(const AngularKernel& b, double eps);

struct AsymptoticReport {
  double nu = 0.0;
  std::vector<double> eps;
  std::vector<double> n_co;
  std::vector<double> m_nco;
  double slope_n = 0.0;   // log-log slope of n^{CO}; for nu = 0 the log ratio is used instead
  double slope_m = 0.0;   // log-log slope of m^{NCO}
  double expected_n = 0.0;
  double expected_m = 0.0;
  double log_ratio_measured = 0.0;  // nu = 0 only: n(eps_last)/n(eps_first)
  double log_ratio_expected = 0.0;  // nu = 0 only: log(eps_last)/log(eps_first)
  bool pass_n = false;
  bool pass_m = false;
  bool pass() const { return pass_n && pass_m; }
};

/// Fits eps-scaling exponents of n^{CO}_eps and m^{NCO}_eps. Relative tolerance 10%.
AsymptoticReport asymptotic_check(const AngularKernel& b, const std::vector<double>& eps_list);

}  // namespace boltzwall
