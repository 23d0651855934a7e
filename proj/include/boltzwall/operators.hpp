#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "boltzwall/kernel.hpp"
#include "boltzwall/velocity_grid.hpp"

namespace boltzwall {

struct PostCollision {
  Vec2 v_prime;
  Vec2 v_star_prime;
  double cos_theta;
};

/// sigma-parametrized outgoing pair; cos_theta = 1 when v == v_star.
PostCollision post_collision(Vec2 v, Vec2 v_star, Vec2 sigma);

/// Quadrature on the circle in the angle phi measured from (v - v_*)/|v - v_*|.
/// Weights already include b(cos theta), theta = |phi|.
struct AngularRule {
  std::vector<double> phi;
  std::vector<double> weight;
  double total() const;
};

/// Rule for an integrable angular kernel: uniform nodes for an untruncated
/// constant kernel, otherwise composite 4-point Gauss-Legendre panels graded
/// toward the singular end.
AngularRule cutoff_rule(const AngularKernel& b, int n_sigma);

struct Observables {
  double rho = 0.0;              // int f
  double energy = 0.0;           // int |v|^2 f
  double weighted_energy = 0.0;  // int |v|^{gamma~} f, gamma~ = (2 + gamma)^+
  double l1_weighted = 0.0;      // int <v>^{gamma~} |f|
  double lp = 0.0;               // ||f||_{L^p}
  double p = 1.0;
  double w2inf = 0.0;            // max of sup |f|, |Df|, |D^2 f| (centered differences)
  double entropy = 0.0;          // int f log f, with 0 log 0 = 0
};

Observables observables(const VelocityGrid& grid, std::span<const double> f, double p, double gamma);

/// Values that replace the unspecified constants of the L, S and Q^1 bounds.
struct CalibratedConstants {
  double cst_L = 1.0;
  double cst_S = 1.0;
  double cst_Q1 = 1.0;
  int samples = 0;
  std::uint64_t seed = 0;
  bool empirically_calibrated = false;
};

struct BoundConstants {
  double C_L = 0.0;
  double C_S = 0.0;
};

/// C_L = cst_L n_b C_phi e (+ l^p for soft power potentials), C_S likewise with m_b.
/// Throws InvalidArgument if the soft case is used with p <= d/(d+gamma).
BoundConstants bound_constants(const Observables& obs, const KineticPotential& phi, double n_b, double m_b,
                               const CalibratedConstants& cst);

/// Split collision operators on a velocity grid.
///
/// For an integrable angular kernel the whole kernel is the cutoff part. For a
/// singular kernel with nu >= 0 a split angle eps in (0, pi/4) is required: the
/// cutoff part b^{CO}_eps drives L and Q^+, the remainder b^{NCO}_eps drives S and Q^1.
class CollisionOperators {
 public:
  CollisionOperators(std::shared_ptr<const VelocityGrid> grid, CollisionKernel kernel, int n_sigma,
                     std::optional<double> eps = std::nullopt);
  ~CollisionOperators();
  CollisionOperators(CollisionOperators&&) noexcept;

  const VelocityGrid& grid() const { return *grid_; }
  std::shared_ptr<const VelocityGrid> grid_ptr() const { return grid_; }
  const CollisionKernel& kernel() const { return kernel_; }
  const AngularKernel& cutoff_part() const { return b_co_; }
  bool noncutoff() const { return b_nco_.has_value(); }
  double n_b() const { return n_b_; }
  double m_b() const { return m_b_; }
  double l_b() const { return l_b_; }
  int n_sigma() const { return n_sigma_; }

  /// L[g] on every grid node.
  void loss(std::span<const double> g, std::span<double> out) const;
  /// Q^+(g, h) on every grid node. When g and h are the same array the
  /// sigma <-> -sigma symmetry is used.
  void gain(std::span<const double> g, std::span<const double> h, std::span<double> out) const;
  /// S[g] on every grid node (zero for a cutoff kernel).
  void s_weight(std::span<const double> g, std::span<double> out) const;
  /// Q^1(g, h) on every grid node (zero for a cutoff kernel).
  void q1(std::span<const double> g, std::span<const double> h, std::span<double> out) const;

  /// Single-node versions (node index into the grid).
  double loss_at(std::span<const double> g, std::size_t k) const;
  double gain_at(std::span<const double> g, std::span<const double> h, std::size_t k) const;
  /// Interpolated g vanishes outside B(center, g_radius) and h outside B(center, h_radius).
  struct SupportHint {
    Vec2 center;
    double g_radius;
    double h_radius;
  };
  /// Q^+(g, h) on a subset of nodes with the full angular rule. With a hint, v_*
  /// is restricted to the pre-collisional region allowed by momentum and energy
  /// conservation, which leaves the result unchanged.
  std::vector<double> gain_at(std::span<const double> g, std::span<const double> h,
                              std::span<const std::size_t> nodes, const SupportHint* hint = nullptr) const;

  /// kappa(v) = L[M](v) M(v) / Q^+(M, M)(v) for the unit-density Maxwellian at
  /// temperature T (1 where the gain underflows). Multiplying the discrete gain by
  /// kappa makes that Maxwellian an exact discrete equilibrium.
  std::vector<double> equilibrium_factor(double T) const;

  std::vector<double> loss(std::span<const double> g) const;
  std::vector<double> gain(std::span<const double> g, std::span<const double> h) const;
  std::vector<double> s_weight(std::span<const double> g) const;
  std::vector<double> q1(std::span<const double> g, std::span<const double> h) const;

  /// A priori bilinear-interpolation error scale of Q^+(M, M) for the unit
  /// Maxwellian: n_b C_phi (h_v^2 / 8) sup_v (|v|^2 + 6) M(v).
  double quadrature_tolerance() const;

 private:
  struct GainTable;
  struct NcoTable;

  std::shared_ptr<const VelocityGrid> grid_;
  CollisionKernel kernel_;
  AngularKernel b_co_;
  std::optional<AngularKernel> b_nco_;
  int n_sigma_;
  double n_b_ = 0.0;
  double m_b_ = 0.0;
  double l_b_ = 0.0;
  std::vector<double> phi_u_;  // Phi(|u|) over the difference lattice
  std::unique_ptr<GainTable> full_;
  std::unique_ptr<GainTable> folded_;
  std::unique_ptr<NcoTable> nco_;
};

/// Randomized family used for calibration: sums of 1 to 3 Maxwellians with
/// rho in [0.5, 2], T in [0.5, 2], |center| <= 2.
std::vector<std::vector<double>> calibration_family(const VelocityGrid& grid, int count, std::uint64_t seed);

/// cst = 1.05 x the largest observed ratio of each operator to its bound over the
/// calibration family, evaluated on nodes with |v| <= V_max / 2.
CalibratedConstants calibrate_bound_constants(const CollisionOperators& ops, int count, std::uint64_t seed,
                                              double p = 2.0);

}  // namespace boltzwall
