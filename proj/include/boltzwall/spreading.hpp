#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "boltzwall/operators.hpp"

namespace boltzwall {

struct SpreadInputs {
  Vec2 vbar;
  double r = 1.0;
  double R = 1.0;
  double xi = 0.25;
};

struct SpreadGridSpec {
  double v_max = 0.0;
  double h_v = 0.0;
  int n_sigma = 0;
  std::size_t target_nodes = 0;
  int rim_points = 0;
};

struct SpreadReport {
  SpreadInputs inputs;
  double target_radius = 0.0;  // sqrt(r^2 + R^2)(1 - xi)
  double measured_min = 0.0;
  double bound_value = 0.0;
  double cst_Q = 0.0;
  SpreadGridSpec grid_spec;
  bool pass = false;
};

struct SeedBox {
  double R0 = 0.0;
  double r0 = 0.0;
  double eta0 = 0.0;
  Vec2 vbar;
};

/// Brute-force evaluation of Q^+(1_{B(vbar,R)}, 1_{B(vbar,r)}) on every lattice
/// node of the target ball and on points of its bounding circle, using the
/// cutoff part of the operators' kernel.
class SpreadOracle {
 public:
  /// Owns a grid of half-width v_max and spacing h_v.
  SpreadOracle(CollisionKernel kernel, double v_max, double h_v, int n_sigma);
  explicit SpreadOracle(std::shared_ptr<const CollisionOperators> ops);

  const CollisionOperators& operators() const { return *ops_; }

  /// Formula value without the calibrated constant: l_b c_phi r^{d-3} R^{3+gamma} xi^{d/2-1}.
  double shape_factor(const SpreadInputs& in) const;

  /// Throws InvalidArgument for r > R, xi outside (0, 1), h_v > r/4, or a grid
  /// too small to contain every pre-collisional velocity.
  SpreadReport verify(const SpreadInputs& in, double cst_Q) const;

  /// Q^+(1_{B(vbar,R)}, 1_{B(vbar,r)}) on all grid nodes.
  std::vector<double> gain_field(const SpreadInputs& in) const;

 private:
  std::shared_ptr<const CollisionOperators> ops_;
};

/// cst_Q = 0.95 x min over samples of measured_min / shape_factor.
/// Needs at least min_samples configurations; a zero minimum is a grid failure.
double calibrate_cst(const SpreadOracle& oracle, std::span<const SpreadInputs> samples, int min_samples = 64);

/// Random configurations: |vbar| <= vbar_max, R in [1, 1.5], r / R in [0.5, 1],
/// xi in [0.1, 0.5]. Distinct seeds give disjoint sets with probability one.
std::vector<SpreadInputs> spread_samples(int count, std::uint64_t seed, double vbar_max = 0.5);

/// The 8 corners of the parameter box (R, r/R, xi) at vbar = 0 followed by
/// count - 8 random configurations. The ratio to the formula is smallest at
/// the corners, so sets drawn by spread_samples from another seed stay above it.
std::vector<SpreadInputs> calibration_samples(int count, std::uint64_t seed);

/// Iterated gain Q^+(Q^+(g, g), g) with g = phi 1_{B(0,R0)}.
std::vector<double> iterated_gain(const CollisionOperators& ops, std::span<const double> phi, double R0);

/// min of a grid field over the lattice nodes of B(vbar, r0), or 0 if the ball holds no node.
double ball_min(const VelocityGrid& grid, std::span<const double> field, Vec2 vbar, double r0);

/// Searches R0 in {1, 2, 4, 8} (smallest radius holding half the mass of phi),
/// vbar over lattice nodes with |vbar| < R0 and r0 over a dyadic ladder, and
/// returns the box maximizing eta0 r0^2. Throws InvalidArgument for zero mass
/// and NumericalAbort when no positive level exists.
SeedBox iterated_seed(const CollisionOperators& ops, std::span<const double> phi);

}  // namespace boltzwall
