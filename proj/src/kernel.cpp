#include "boltzwall/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "boltzwall/quadrature.hpp"

namespace boltzwall {

namespace {

constexpr double kAngularRelTol = 1e-11;

void check_potential(double gamma, double c_phi, double C_phi) {
  if (!(gamma > -2.0) || !(gamma <= 1.0)) throw InvalidArgument("potential: gamma must lie in (-2, 1]");
  if (!(c_phi > 0.0) || !(c_phi <= C_phi) || !std::isfinite(C_phi))
    throw InvalidArgument("potential: need 0 < c_phi <= C_phi");
}

}  // namespace

KineticPotential KineticPotential::power(double gamma, double c_phi, double C_phi) {
  check_potential(gamma, c_phi, C_phi);
  return {Form::Power, gamma, c_phi, C_phi};
}

KineticPotential KineticPotential::mollified(double gamma, double c_phi, double C_phi) {
  check_potential(gamma, c_phi, C_phi);
  return {Form::Mollified, gamma, c_phi, C_phi};
}

double KineticPotential::eval(double z) const {
  z = std::abs(z);
  if (gamma == 0.0) return C_phi;
  if (form == Form::Mollified && z <= 1.0) return C_phi;
  if (z == 0.0) {
    if (gamma < 0.0) throw InvalidArgument("potential: singular at z = 0 for the power form");
    return 0.0;
  }
  return C_phi * std::pow(z, gamma);
}

AngularKernel AngularKernel::constant(double value, int d) {
  if (!(value > 0.0) || !std::isfinite(value)) throw InvalidArgument("angular kernel: value must be positive");
  if (d < 2) throw InvalidArgument("angular kernel: dimension must be >= 2");
  AngularKernel k;
  k.family_ = Family::Constant;
  k.value_ = value;
  k.d_ = d;
  return k;
}

AngularKernel AngularKernel::singular(double nu, double b0, int d) {
  if (!(nu < 2.0) || !std::isfinite(nu)) throw InvalidArgument("angular kernel: nu must be < 2");
  if (!(b0 > 0.0)) throw InvalidArgument("angular kernel: b0 must be positive");
  if (d < 2) throw InvalidArgument("angular kernel: dimension must be >= 2");
  AngularKernel k;
  k.family_ = Family::Singular;
  k.nu_ = nu;
  k.b0_ = b0;
  k.d_ = d;
  return k;
}

AngularKernel AngularKernel::truncated(double eps, Side side) const {
  if (side_ != Side::Full) throw InvalidArgument("angular kernel: already truncated");
  if (!(eps > 0.0) || !(eps < kPi)) throw InvalidArgument("angular kernel: eps must lie in (0, pi)");
  AngularKernel k = *this;
  k.side_ = side;
  k.eps_ = (side == Side::Full) ? 0.0 : eps;
  return k;
}

double AngularKernel::eval_untruncated(double theta) const {
  if (family_ == Family::Constant) return value_;
  if (theta <= 0.0) return std::numeric_limits<double>::infinity();
  double w = 1.0;
  if (theta > 0.5 * kPi) {
    const double s = std::sin(theta);
    w = s * s;
  }
  double v = b0_ * std::pow(theta, -(1.0 + nu_)) * w;
  if (d_ > 2) {
    const double s = std::sin(theta);
    if (s <= 0.0) return 0.0;
    v /= std::pow(s, d_ - 2);
  }
  return v;
}

double AngularKernel::eval(double theta) const {
  theta = std::abs(theta);
  switch (side_) {
    case Side::Full:
      return eval_untruncated(theta);
    case Side::CO:
      return theta >= eps_ ? eval_untruncated(theta) : 0.0;
    case Side::NCO:
      return theta < eps_ ? eval_untruncated(theta) : 0.0;
  }
  return 0.0;
}

bool AngularKernel::integrable() const {
  if (family_ == Family::Constant) return true;
  if (side_ == Side::CO) return true;
  return nu_ < 0.0;
}

std::string AngularKernel::describe() const {
  std::ostringstream os;
  if (family_ == Family::Constant)
    os << "constant(" << value_ << ")";
  else
    os << "singular(nu=" << nu_ << ", b0=" << b0_ << ")";
  if (side_ == Side::CO) os << " CO eps=" << eps_;
  if (side_ == Side::NCO) os << " NCO eps=" << eps_;
  return os.str();
}

namespace {

// |S^{d-2}| int_lo^hi b(theta) sin^{d-2}(theta) weight(theta) dtheta over the
// support of the (possibly truncated) kernel.
template <class Weight>
double angular_integral(const AngularKernel& b, Weight weight) {
  const int d = b.dim();
  double lo = 0.0, hi = kPi;
  if (b.side() == AngularKernel::Side::CO) lo = b.eps();
  if (b.side() == AngularKernel::Side::NCO) hi = b.eps();

  std::function<double(double)> f;
  if (b.family() == AngularKernel::Family::Singular) {
    // b sin^{d-2} = b0 theta^{-(1+nu)} W(theta), evaluated without the 0/0 at pi
    f = [&](double t) {
      double w = 1.0;
      if (t > 0.5 * kPi) {
        const double s = std::sin(t);
        w = s * s;
      }
      return b.b0() * std::pow(t, -(1.0 + b.nu())) * w * weight(t);
    };
  } else {
    f = [&](double t) { return b.value() * std::pow(std::sin(t), d - 2) * weight(t); };
  }

  double sum = 0.0;
  if (b.family() == AngularKernel::Family::Singular) {
    const double mid = std::min(hi, 0.5 * kPi);
    if (lo < mid) {
      if (lo == 0.0)
        sum += quad::integrate_left_singular(f, mid, kAngularRelTol);
      else
        sum += quad::integrate_graded(f, lo, mid, kAngularRelTol);
    }
    const double lo2 = std::max(lo, 0.5 * kPi);
    if (lo2 < hi) sum += quad::integrate(f, lo2, hi, kAngularRelTol);
  } else {
    sum = quad::integrate(f, lo, hi, kAngularRelTol);
  }
  return sphere_measure(d - 2) * sum;
}

}  // namespace

double compute_n_b(const AngularKernel& b) {
  if (!b.integrable()) throw InvalidArgument("n_b diverges for this angular kernel (nu >= 0 without CO truncation)");
  return angular_integral(b, [](double) { return 1.0; });
}

double compute_m_b(const AngularKernel& b) {
  // 1 - cos t written as 2 sin^2(t/2) to keep relative accuracy near t = 0
  return angular_integral(b, [](double t) {
    const double s = std::sin(0.5 * t);
    return 2.0 * s * s;
  });
}

double compute_l_b(const AngularKernel& b) {
  const double lo = 0.25 * kPi, hi = 0.75 * kPi;
  constexpr int n = 2000;
  double best = b.eval(lo);
  int ib = 0;
  for (int i = 1; i <= n; ++i) {
    const double v = b.eval(lo + (hi - lo) * i / n);
    if (v < best) {
      best = v;
      ib = i;
    }
  }
  const double h = (hi - lo) / n;
  const double c = lo + ib * h;
  const double t = quad::golden_min([&](double x) { return b.eval(x); }, std::max(lo, c - h),
                                    std::min(hi, c + h), 1e-13);
  return std::min(best, b.eval(t));
}

KernelConstants kernel_constants(const AngularKernel& b) {
  KernelConstants k;
  k.d = b.dim();
  k.n_b = compute_n_b(b);
  k.m_b = compute_m_b(b);
  k.l_b = compute_l_b(b);
  return k;
}

std::pair<AngularKernel, AngularKernel> split_at(const AngularKernel& b, double eps) {
  if (!(eps > 0.0) || !(eps < 0.25 * kPi)) throw InvalidArgument("split_at: eps must lie in (0, pi/4)");
  return {b.truncated(eps, AngularKernel::Side::CO), b.truncated(eps, AngularKernel::Side::NCO)};
}

AsymptoticReport asymptotic_check(const AngularKernel& b, const std::vector<double>& eps_list) {
  if (b.family() != AngularKernel::Family::Singular || b.side() != AngularKernel::Side::Full)
    throw InvalidArgument("asymptotic_check: needs an untruncated singular kernel");
  if (eps_list.size() < 2) throw InvalidArgument("asymptotic_check: need at least two eps values");
  AsymptoticReport r;
  r.nu = b.nu();
  r.eps = eps_list;
  std::vector<double> le, ln, lm;
  for (double e : eps_list) {
    const double n = compute_n_b(b.truncated(e, AngularKernel::Side::CO));
    const double m = compute_m_b(b.truncated(e, AngularKernel::Side::NCO));
    r.n_co.push_back(n);
    r.m_nco.push_back(m);
    le.push_back(std::log(e));
    ln.push_back(std::log(n));
    lm.push_back(std::log(m));
  }
  constexpr double kRel = 0.10;
  r.slope_m = quad::fit_slope(le, lm);
  r.expected_m = 2.0 - b.nu();
  r.pass_m = std::abs(r.slope_m - r.expected_m) <= kRel * std::abs(r.expected_m);
  r.slope_n = quad::fit_slope(le, ln);
  r.expected_n = -b.nu();
  if (b.nu() == 0.0) {
    r.log_ratio_measured = r.n_co.back() / r.n_co.front();
    r.log_ratio_expected = le.back() / le.front();
    r.pass_n = std::abs(r.log_ratio_measured - r.log_ratio_expected) <= kRel * r.log_ratio_expected;
  } else {
    r.pass_n = std::abs(r.slope_n - r.expected_n) <= kRel * std::abs(r.expected_n);
  }
  return r;
}

}  // namespace boltzwall
