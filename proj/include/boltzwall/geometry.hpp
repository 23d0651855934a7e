#pragma once

#include <limits>
#include <string>

#include "boltzwall/common.hpp"

namespace boltzwall {

enum class ShapeKind { Disk, Ellipse, Superellipse };

struct BoundingBox {
  Vec2 lo;
  Vec2 hi;
  double diagonal() const { return norm(hi - lo); }
};

/// First boundary contact of a ray. When a search horizon was given and the
/// ray stays inside up to it, hit is false and t_contact is +inf.
struct RayContact {
  bool hit = false;
  double t_contact = std::numeric_limits<double>::infinity();
  Vec2 x_contact;
  Vec2 normal;
  bool grazing = false;
};

/// Boundary positivity constants seen from an interior point x1.
/// lambda and bconst carry the safety factor; the *_raw fields do not.
struct GeometricConstants {
  double lambda = 0.0;
  double bconst = 0.0;
  double lambda_raw = 0.0;
  double bconst_raw = 0.0;
  Vec2 argmin_point;         // minimizer of n(x).(x - x1)
  Vec2 lambda_argmin_point;  // minimizer of n(x).(x - x1)/|x - x1|
};

/// Convex C^2 region {g < 0} described by an analytic level function.
class ConvexDomain {
 public:
  static constexpr double kBoundaryTol = 1e-9;
  static constexpr double kGrazingTol = 1e-8;
  static constexpr double kRootTol = 1e-12;
  static constexpr int kScanPoints = 4096;
  static constexpr double kSafetyFactor = 0.99;

  static ConvexDomain disk(Vec2 center, double radius);
  /// Requires a >= b > 0.
  static ConvexDomain ellipse(Vec2 center, double a, double b);
  /// Requires a, b > 0 and an even exponent p >= 2.
  static ConvexDomain superellipse(Vec2 center, double a, double b, int p);

  ShapeKind kind() const { return kind_; }
  std::string name() const;
  Vec2 center() const { return center_; }
  double semi_a() const { return a_; }
  double semi_b() const { return b_; }
  int exponent() const { return p_; }

  double level(Vec2 x) const;
  Vec2 gradient(Vec2 x) const;
  bool contains(Vec2 x) const { return level(x) < 0.0; }

  /// Outward unit normal. Throws InvalidArgument if x is not on the boundary.
  Vec2 normal_at(Vec2 x) const;

  /// Boundary point for parameter s in [0, 2 pi).
  Vec2 boundary_point(double s) const;
  /// Inverse of boundary_point for a boundary point x, in [0, 2 pi).
  double boundary_parameter(Vec2 x) const;

  /// Smallest t >= 0 with x - t v on the boundary, searched up to t_max.
  RayContact backward_contact(Vec2 x, Vec2 v,
                              double t_max = std::numeric_limits<double>::infinity()) const;
  /// Smallest t >= 0 with x + t v on the boundary, searched up to t_max.
  RayContact forward_contact(Vec2 x, Vec2 v,
                             double t_max = std::numeric_limits<double>::infinity()) const;

  /// Normal at the forward contact point of the unit-speed ray from x along v.
  Vec2 forward_normal_map(Vec2 x, Vec2 v) const;

  GeometricConstants geometric_constants(Vec2 x1) const;

  double distance_to_boundary(Vec2 x) const;
  double diameter() const;
  BoundingBox bounding_box() const;

 private:
  ConvexDomain(ShapeKind k, Vec2 c, double a, double b, int p)
      : kind_(k), center_(c), a_(a), b_(b), p_(p) {}

  RayContact ray_contact(Vec2 x, Vec2 dir, double t_max) const;

  ShapeKind kind_;
  Vec2 center_;
  double a_;
  double b_;
  int p_;
};

}  // namespace boltzwall
