#include "boltzwall/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "boltzwall/quadrature.hpp"

namespace boltzwall {

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

double signed_pow(double x, double e) { return std::copysign(std::pow(std::abs(x), e), x); }

// Minimizes f over a periodic parameter in [0, 2 pi): uniform scan then a
// golden-section refinement around the best scan node.
std::pair<double, double> periodic_min(const std::function<double(double)>& f, int n) {
  const double ds = 2.0 * kPi / n;
  int best = 0;
  double fbest = f(0.0);
  for (int i = 1; i < n; ++i) {
    const double v = f(i * ds);
    if (v < fbest) {
      fbest = v;
      best = i;
    }
  }
  const double s0 = best * ds;
  const double s = quad::golden_min(f, s0 - ds, s0 + ds, 1e-13);
  const double fs = f(s);
  if (fs < fbest) return {s, fs};
  return {s0, fbest};
}

}  // namespace

ConvexDomain ConvexDomain::disk(Vec2 center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("disk: radius must be positive");
  return ConvexDomain(ShapeKind::Disk, center, radius, radius, 2);
}

ConvexDomain ConvexDomain::ellipse(Vec2 center, double a, double b) {
  if (!(b > 0.0) || !(a >= b) || !std::isfinite(a))
    throw InvalidArgument("ellipse: semi-axes must satisfy a >= b > 0");
  return ConvexDomain(ShapeKind::Ellipse, center, a, b, 2);
}

ConvexDomain ConvexDomain::superellipse(Vec2 center, double a, double b, int p) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw InvalidArgument("superellipse: semi-axes must be positive");
  if (p < 2 || p % 2 != 0) throw InvalidArgument("superellipse: exponent must be even and >= 2");
  return ConvexDomain(ShapeKind::Superellipse, center, a, b, p);
}

std::string ConvexDomain::name() const {
  switch (kind_) {
    case ShapeKind::Disk:
      return "disk";
    case ShapeKind::Ellipse:
      return "ellipse";
    case ShapeKind::Superellipse:
      return "superellipse";
  }
  return "unknown";
}

double ConvexDomain::level(Vec2 x) const {
  const double X = (x.x - center_.x) / a_;
  const double Y = (x.y - center_.y) / b_;
  return ipow(X, p_) + ipow(Y, p_) - 1.0;
}

Vec2 ConvexDomain::gradient(Vec2 x) const {
  const double X = (x.x - center_.x) / a_;
  const double Y = (x.y - center_.y) / b_;
  return {p_ * ipow(X, p_ - 1) / a_, p_ * ipow(Y, p_ - 1) / b_};
}

Vec2 ConvexDomain::normal_at(Vec2 x) const {
  if (std::abs(level(x)) > kBoundaryTol) throw InvalidArgument("normal_at: point is not on the boundary");
  const Vec2 g = gradient(x);
  return g / norm(g);
}

Vec2 ConvexDomain::boundary_point(double s) const {
  const double e = 2.0 / p_;
  return {center_.x + a_ * signed_pow(std::cos(s), e), center_.y + b_ * signed_pow(std::sin(s), e)};
}

double ConvexDomain::boundary_parameter(Vec2 x) const {
  const double e = 0.5 * p_;
  const Vec2 d = x - center_;
  double s = std::atan2(signed_pow(d.y / b_, e), signed_pow(d.x / a_, e));
  if (s < 0.0) s += 2.0 * kPi;
  return s >= 2.0 * kPi ? 0.0 : s;
}

BoundingBox ConvexDomain::bounding_box() const {
  return {{center_.x - a_, center_.y - b_}, {center_.x + a_, center_.y + b_}};
}

RayContact ConvexDomain::ray_contact(Vec2 x, Vec2 dir, double t_max) const {
  const double speed = norm(dir);
  if (!(speed > 0.0)) throw InvalidArgument("contact: velocity must be nonzero");
  const double g0 = level(x);
  if (g0 > kBoundaryTol) throw InvalidArgument("contact: point lies outside the domain");

  auto finish = [&](double t) {
    RayContact rc;
    rc.hit = true;
    rc.t_contact = t;
    rc.x_contact = x + dir * t;
    const Vec2 g = gradient(rc.x_contact);
    rc.normal = g / norm(g);
    rc.grazing = std::abs(dot(rc.normal, dir) / speed) < kGrazingTol;
    return rc;
  };
  if (g0 >= -kBoundaryTol) return finish(0.0);

  auto h = [&](double t) { return level(x + dir * t); };
  const double step = bounding_box().diagonal() / (1024.0 * speed);
  const double horizon = std::min(t_max, 2.0 * bounding_box().diagonal() / speed);
  double lo = 0.0;
  double hi = -1.0;
  for (double t = step;; t += step) {
    const double tc = std::min(t, horizon);
    if (h(tc) >= 0.0) {
      hi = tc;
      break;
    }
    lo = tc;
    if (tc >= horizon) break;
  }
  if (hi < 0.0) return RayContact{};

  // safeguarded Newton on the bracket [lo, hi]
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const Vec2 p = x + dir * t;
    const double ht = level(p);
    if (ht < 0.0)
      lo = t;
    else
      hi = t;
    const double dh = dot(gradient(p), dir);
    double tn = (dh != 0.0) ? t - ht / dh : 0.5 * (lo + hi);
    if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
    const double dt = std::abs(tn - t);
    t = tn;
    if (dt < kRootTol || hi - lo < kRootTol) break;
  }
  return finish(t);
}

RayContact ConvexDomain::backward_contact(Vec2 x, Vec2 v, double t_max) const {
  return ray_contact(x, -v, t_max);
}

RayContact ConvexDomain::forward_contact(Vec2 x, Vec2 v, double t_max) const {
  return ray_contact(x, v, t_max);
}

Vec2 ConvexDomain::forward_normal_map(Vec2 x, Vec2 v) const {
  const double s = norm(v);
  if (!(s > 0.0)) throw InvalidArgument("forward_normal_map: velocity must be nonzero");
  return forward_contact(x, v / s).normal;
}

GeometricConstants ConvexDomain::geometric_constants(Vec2 x1) const {
  if (!(level(x1) < -kBoundaryTol)) throw InvalidArgument("geometric_constants: x1 must be interior");
  auto normal_s = [&](double s) {
    const Vec2 g = gradient(boundary_point(s));
    return g / norm(g);
  };
  auto f_b = [&](double s) {
    const Vec2 X = boundary_point(s);
    return dot(normal_s(s), X - x1);
  };
  auto f_l = [&](double s) {
    const Vec2 X = boundary_point(s);
    const Vec2 d = X - x1;
    return dot(normal_s(s), d) / norm(d);
  };
  const auto [sb, mb] = periodic_min(f_b, kScanPoints);
  const auto [sl, ml] = periodic_min(f_l, kScanPoints);
  GeometricConstants gc;
  gc.bconst_raw = 0.5 * mb;
  gc.lambda_raw = 0.5 * ml;
  gc.bconst = kSafetyFactor * gc.bconst_raw;
  gc.lambda = kSafetyFactor * gc.lambda_raw;
  gc.argmin_point = boundary_point(sb);
  gc.lambda_argmin_point = boundary_point(sl);
  return gc;
}

double ConvexDomain::distance_to_boundary(Vec2 x) const {
  if (kind_ == ShapeKind::Disk) return std::abs(a_ - norm(x - center_));
  auto f = [&](double s) { return norm(boundary_point(s) - x); };
  return periodic_min(f, kScanPoints).second;
}

double ConvexDomain::diameter() const {
  if (kind_ != ShapeKind::Superellipse) return 2.0 * std::max(a_, b_);
  auto f = [&](double s) { return -norm(boundary_point(s) - center_); };
  return -2.0 * periodic_min(f, kScanPoints).second;
}

}  // namespace boltzwall
