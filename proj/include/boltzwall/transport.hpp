#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "boltzwall/geometry.hpp"
#include "boltzwall/operators.hpp"

namespace boltzwall {

/// Maxwellian diffusion wall at temperature T_wall.
class BoundaryModel {
 public:
  explicit BoundaryModel(double T_wall);
  double temperature() const { return T_; }
  /// (2 pi)^{(d-1)/2} T^{(d+1)/2}, d = 2.
  double normalization() const;
  /// int_{v.n<0} |v.n| exp(-|v|^2 / 2T) dv by adaptive quadrature in polar form.
  double normalization_quadrature() const;
  /// f_wall(v) = outflux exp(-|v|^2 / 2T) / normalization. Requires v.n <= 0.
  double emission(double outflux, Vec2 v, Vec2 n) const;

 private:
  double T_;
};

/// Interpolation weights over up to four cells. A negative index -(g + 1)
/// refers to wall ghost g of the solver.
struct Stencil {
  int n = 0;
  std::array<int, 4> idx{};
  std::array<double, 4> w{};
};

/// Cartesian lattice x = c + h (i, j) masked to the open domain.
class SpatialGrid {
 public:
  enum class Flag { Interior, BoundaryAdjacent };

  SpatialGrid(const ConvexDomain& domain, double h_x);

  double h() const { return h_; }
  std::size_t size() const { return x_.size(); }
  Vec2 center(std::size_t c) const { return x_[c]; }
  Flag flag(std::size_t c) const { return flag_[c]; }
  int lattice_i(std::size_t c) const { return li_[c]; }
  int lattice_j(std::size_t c) const { return lj_[c]; }
  /// Cell index of lattice node (i, j), or -1.
  int cell(int i, int j) const;

  struct Corner {
    int i = 0, j = 0;
    int cell = -1;  // -1 when the lattice point lies outside the domain
    double w = 0.0;
  };
  /// The four lattice corners around y with their bilinear weights.
  std::array<Corner, 4> corners(Vec2 y) const;
  Vec2 lattice_point(int i, int j) const { return origin_ + Vec2{i * h_, j * h_}; }

  /// Bilinear weights at y. Corners that are not cells are dropped and the
  /// remaining weights renormalized (one-sided near the wall); if no corner
  /// exists the nearest cell within two lattice rings is used.
  Stencil stencil(Vec2 y) const;

 private:
  Vec2 origin_;
  double h_;
  int half_i_, half_j_;
  std::vector<Vec2> x_;
  std::vector<Flag> flag_;
  std::vector<int> li_, lj_;
  std::vector<int> lookup_;
};

struct SchemeParams {
  double dt = 0.05;
  double v_max = 6.0;
  double h_v = 0.5;
  double h_x = 0.1;
  int n_sigma = 16;
  std::optional<double> eps;  // split angle for non-cutoff kernels
  double cfl_factor = 4.0;
  int wall_samples = 256;
  /// Multiply the gain by the equilibrium factor of the wall Maxwellian.
  bool equilibrium_correction = true;
  /// Rescale the gain in each cell so the discrete collision term has zero mass.
  bool collision_mass_fix = true;
  /// Scale the wall emission each step so the transport part conserves the discrete mass.
  bool conservative_wall = false;
};

struct InitialData {
  enum class Kind { Maxwellian, VacuumPatch, Blob, GaussianBlob };
  Kind kind = Kind::Maxwellian;
  double rho = 1.0;
  double T = 1.0;
  Vec2 u;
  Vec2 x_center;        // patch or blob center
  double x_radius = 0.3;  // patch radius, blob radius or Gaussian width
  Vec2 v_center;        // Blob velocity center
  double v_radius = 1.0;  // Blob velocity radius

  double eval(Vec2 x, Vec2 v) const;
};

class DistributionField {
 public:
  DistributionField(std::shared_ptr<const SpatialGrid> space, std::shared_ptr<const VelocityGrid> velocity);

  const SpatialGrid& space() const { return *space_; }
  const VelocityGrid& velocity() const { return *vel_; }
  std::size_t cells() const { return space_->size(); }
  std::size_t nodes() const { return vel_->size(); }

  double& operator()(std::size_t c, std::size_t k) { return f_[c * nodes() + k]; }
  double operator()(std::size_t c, std::size_t k) const { return f_[c * nodes() + k]; }
  std::span<const double> slice(std::size_t c) const { return {f_.data() + c * nodes(), nodes()}; }
  std::span<double> slice(std::size_t c) { return {f_.data() + c * nodes(), nodes()}; }
  std::span<const double> values() const { return f_; }
  std::vector<double>& mutable_values() { return f_; }

  double time = 0.0;

  /// sum_c h_x^2 sum_k w_k f
  double mass() const;
  double min() const;
  double max() const;
  /// f(x, v_k) through the spatial stencil.
  double interpolate(Vec2 x, std::size_t k) const;

 private:
  std::shared_ptr<const SpatialGrid> space_;
  std::shared_ptr<const VelocityGrid> vel_;
  std::vector<double> f_;
};

struct StepStats {
  double t = 0.0;
  double mass = 0.0;
  double min_f = 0.0;
  double max_f = 0.0;
  double clamped_mass = 0.0;
  long grazing_count = 0;
  double flux_imbalance = 0.0;  // max over wall samples of |emitted - absorbed| / absorbed
  double emission_scale = 1.0;  // factor applied to the wall emission in this step
};

/// Split scheme for d_t f + v . grad_x f = Q(f, f) with Maxwellian diffusion at
/// the wall: semi-Lagrangian transport followed by a cell-local exponential
/// collision step.
class TransportSolver {
 public:
  /// Without a kernel the collision term is zero (free transport).
  TransportSolver(ConvexDomain domain, std::optional<CollisionKernel> kernel, SchemeParams params,
                  BoundaryModel wall);
  ~TransportSolver();
  TransportSolver(TransportSolver&&) noexcept;

  const ConvexDomain& domain() const { return domain_; }
  const SchemeParams& params() const { return params_; }
  const BoundaryModel& wall() const { return wall_; }
  std::shared_ptr<const SpatialGrid> space() const { return space_; }
  std::shared_ptr<const VelocityGrid> velocity() const { return vel_; }
  const CollisionOperators* operators() const { return ops_.get(); }
  /// Number of (cell, velocity) characteristics handled by the grazing fallback per step.
  long grazing_count() const { return grazing_; }

  DistributionField initial_field(const InitialData& init) const;

  /// int_{v.n>0} f(x_wall, v) (v.n) dv with f interpolated from the adjacent cells.
  double wall_outflux(const DistributionField& f, Vec2 x_wall, Vec2 n) const;
  /// Discrete wall normalization sum_{v.n<0} w |v.n| exp(-|v|^2/2T); emission on the
  /// grid uses it so emitted and absorbed discrete fluxes agree.
  double discrete_normalization(Vec2 n) const;

  /// Advances f by dt. Throws NumericalAbort on a non-finite value.
  StepStats step(DistributionField& f) const;
  StepStats stats(const DistributionField& f) const;

 private:
  struct Characteristic;
  struct Ghost;

  void collide(DistributionField& f, std::vector<double>& clamped) const;

  ConvexDomain domain_;
  std::optional<CollisionKernel> kernel_;
  SchemeParams params_;
  BoundaryModel wall_;
  std::shared_ptr<const SpatialGrid> space_;
  std::shared_ptr<const VelocityGrid> vel_;
  std::unique_ptr<CollisionOperators> ops_;
  std::vector<double> kappa_;
  std::vector<Characteristic> chars_;
  std::vector<Ghost> ghosts_;
  std::vector<Vec2> wall_points_, wall_normals_;
  std::vector<Stencil> wall_stencils_;
  std::vector<double> wall_z_;
  long grazing_ = 0;
};

struct RunResult {
  std::vector<StepStats> series;
  std::vector<DistributionField> snapshots;
};

/// Takes round(t_end / dt) steps (t_end must be a multiple of dt) and keeps
/// snapshots at the requested times, rounded to the nearest step.
RunResult run(const TransportSolver& solver, const InitialData& init, double t_end,
              const std::vector<double>& snapshot_times);

}  // namespace boltzwall
