#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace boltzwall {

inline constexpr double kPi = std::numbers::pi;

/// Plain 2-vector used for both positions and velocities.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
constexpr double norm2(const Vec2& a) { return dot(a, a); }

/// Rotation of v by angle theta (counter-clockwise).
inline Vec2 rotate(const Vec2& v, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Japanese bracket <z> = sqrt(1 + z^2).
inline double bracket(double z) { return std::sqrt(1.0 + z * z); }

/// Volume of the unit ball in R^d.
double unit_ball_volume(int d);

/// Surface measure |S^{k}| of the unit k-sphere in R^{k+1}.
double sphere_measure(int k);

/// Bad user input or a violated precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced NaN/Inf or otherwise cannot continue.
class NumericalAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An emission gate refused to issue a certificate.
class CertificateRefused : public std::runtime_error {
 public:
  CertificateRefused(const std::string& what, int failing_level)
      : std::runtime_error(what), failing_level_(failing_level) {}
  int failing_level() const { return failing_level_; }

 private:
  int failing_level_;
};

}  // namespace boltzwall
