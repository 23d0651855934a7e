#include "boltzwall/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "boltzwall/parallel.hpp"
#include "boltzwall/quadrature.hpp"

namespace boltzwall {

namespace {

// (1 - e^{-z}) / z, continuous at 0
double phi1(double z) {
  if (std::abs(z) < 1e-6) return 1.0 - 0.5 * z + z * z / 6.0;
  return -std::expm1(-z) / z;
}

double apply(const Stencil& s, std::span<const double> values, std::size_t stride, std::size_t k) {
  double out = 0.0;
  for (int q = 0; q < s.n; ++q) out += s.w[q] * values[static_cast<std::size_t>(s.idx[q]) * stride + k];
  return out;
}

}  // namespace

// ---------------------------------------------------------------- BoundaryModel

BoundaryModel::BoundaryModel(double T_wall) : T_(T_wall) {
  if (!(T_wall > 0.0) || !std::isfinite(T_wall)) throw InvalidArgument("wall temperature must be positive");
}

double BoundaryModel::normalization() const { return std::sqrt(2.0 * kPi) * std::pow(T_, 1.5); }

double BoundaryModel::normalization_quadrature() const {
  const double r_max = 40.0 * std::sqrt(T_);
  const double radial = quad::integrate([&](double r) { return r * r * std::exp(-r * r / (2.0 * T_)); }, 0.0, r_max);
  // incoming half-plane for n = (1, 0): theta in (pi/2, 3pi/2)
  const double angular = quad::integrate([](double t) { return std::abs(std::cos(t)); }, 0.5 * kPi, 1.5 * kPi);
  return radial * angular;
}

double BoundaryModel::emission(double outflux, Vec2 v, Vec2 n) const {
  if (dot(v, n) > 0.0) throw InvalidArgument("diffuse emission is defined for incoming velocities only");
  return outflux * std::exp(-norm2(v) / (2.0 * T_)) / normalization();
}

// ---------------------------------------------------------------- SpatialGrid

SpatialGrid::SpatialGrid(const ConvexDomain& domain, double h_x) : origin_(domain.center()), h_(h_x) {
  if (!(h_x > 0.0)) throw InvalidArgument("spatial grid: h_x must be positive");
  const BoundingBox box = domain.bounding_box();
  half_i_ = static_cast<int>(std::ceil(std::max(box.hi.x - origin_.x, origin_.x - box.lo.x) / h_)) + 1;
  half_j_ = static_cast<int>(std::ceil(std::max(box.hi.y - origin_.y, origin_.y - box.lo.y) / h_)) + 1;
  const int wi = 2 * half_i_ + 1;
  const int wj = 2 * half_j_ + 1;
  if (static_cast<long>(wi) * wj > 4'000'000) throw InvalidArgument("spatial grid: h_x too small for the domain");
  lookup_.assign(static_cast<std::size_t>(wi) * wj, -1);
  auto at = [&](int i, int j) { return origin_ + Vec2{i * h_, j * h_}; };
  for (int j = -half_j_; j <= half_j_; ++j)
    for (int i = -half_i_; i <= half_i_; ++i) {
      const Vec2 x = at(i, j);
      if (!domain.contains(x)) continue;
      lookup_[static_cast<std::size_t>((i + half_i_) + wi * (j + half_j_))] = static_cast<int>(x_.size());
      x_.push_back(x);
      li_.push_back(i);
      lj_.push_back(j);
    }
  if (x_.empty()) throw InvalidArgument("spatial grid: no cell center inside the domain");
  flag_.resize(x_.size());
  for (std::size_t c = 0; c < x_.size(); ++c) {
    const int i = li_[c], j = lj_[c];
    const bool inner = cell(i + 1, j) >= 0 && cell(i - 1, j) >= 0 && cell(i, j + 1) >= 0 && cell(i, j - 1) >= 0;
    flag_[c] = inner ? Flag::Interior : Flag::BoundaryAdjacent;
  }
}

int SpatialGrid::cell(int i, int j) const {
  if (i < -half_i_ || i > half_i_ || j < -half_j_ || j > half_j_) return -1;
  return lookup_[static_cast<std::size_t>((i + half_i_) + (2 * half_i_ + 1) * (j + half_j_))];
}

std::array<SpatialGrid::Corner, 4> SpatialGrid::corners(Vec2 y) const {
  const double sx = (y.x - origin_.x) / h_;
  const double sy = (y.y - origin_.y) / h_;
  const int i0 = static_cast<int>(std::floor(sx));
  const int j0 = static_cast<int>(std::floor(sy));
  const double fx = sx - i0;
  const double fy = sy - j0;
  std::array<Corner, 4> out;
  out[0] = {i0, j0, cell(i0, j0), (1 - fx) * (1 - fy)};
  out[1] = {i0 + 1, j0, cell(i0 + 1, j0), fx * (1 - fy)};
  out[2] = {i0, j0 + 1, cell(i0, j0 + 1), (1 - fx) * fy};
  out[3] = {i0 + 1, j0 + 1, cell(i0 + 1, j0 + 1), fx * fy};
  return out;
}

Stencil SpatialGrid::stencil(Vec2 y) const {
  Stencil s;
  double total = 0.0;
  for (const Corner& q : corners(y)) {
    if (q.cell < 0 || q.w <= 0.0) continue;
    s.idx[s.n] = q.cell;
    s.w[s.n] = q.w;
    total += q.w;
    ++s.n;
  }
  if (total > 1e-12) {
    for (int q = 0; q < s.n; ++q) s.w[q] /= total;
    return s;
  }
  // nearest cell within two rings of the containing lattice square
  const int i0 = static_cast<int>(std::floor((y.x - origin_.x) / h_));
  const int j0 = static_cast<int>(std::floor((y.y - origin_.y) / h_));
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int j = j0 - 2; j <= j0 + 3; ++j)
    for (int i = i0 - 2; i <= i0 + 3; ++i) {
      const int c = cell(i, j);
      if (c < 0) continue;
      const double d = norm2(x_[static_cast<std::size_t>(c)] - y);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
  if (best < 0) throw NumericalAbort("spatial stencil: no cell near the requested point");
  s.n = 1;
  s.idx[0] = best;
  s.w[0] = 1.0;
  return s;
}

// ---------------------------------------------------------------- InitialData

double InitialData::eval(Vec2 x, Vec2 v) const {
  switch (kind) {
    case Kind::Maxwellian:
      return maxwellian(v, rho, T, u);
    case Kind::VacuumPatch:
      return norm(x - x_center) < x_radius ? 0.0 : maxwellian(v, rho, T, u);
    case Kind::Blob:
      return (norm(x - x_center) < x_radius && norm(v - v_center) < v_radius) ? rho : 0.0;
    case Kind::GaussianBlob:
      return rho * std::exp(-norm2(x - x_center) / (2.0 * x_radius * x_radius)) * maxwellian(v, 1.0, T, u);
  }
  return 0.0;
}

// ---------------------------------------------------------------- DistributionField

DistributionField::DistributionField(std::shared_ptr<const SpatialGrid> space,
                                     std::shared_ptr<const VelocityGrid> velocity)
    : space_(std::move(space)), vel_(std::move(velocity)) {
  if (!space_ || !vel_) throw InvalidArgument("distribution field: null grid");
  f_.assign(space_->size() * vel_->size(), 0.0);
}

double DistributionField::mass() const {
  double m = 0.0;
  for (std::size_t c = 0; c < cells(); ++c) {
    double s = 0.0;
    for (std::size_t k = 0; k < nodes(); ++k) s += vel_->weight(k) * (*this)(c, k);
    m += s;
  }
  return m * space_->h() * space_->h();
}

double DistributionField::min() const { return *std::min_element(f_.begin(), f_.end()); }
double DistributionField::max() const { return *std::max_element(f_.begin(), f_.end()); }

double DistributionField::interpolate(Vec2 x, std::size_t k) const {
  return apply(space_->stencil(x), f_, nodes(), k);
}

// ---------------------------------------------------------------- TransportSolver

struct TransportSolver::Characteristic {
  enum class Branch : unsigned char { Free, Contact, Grazing };
  Branch branch = Branch::Free;
  Stencil foot;         // Free / Grazing: upstream point, ghosts allowed
  int wall_j = 0;       // Contact: lower wall sample
  double wall_t = 0.0;  // Contact: interpolation weight of wall_j + 1
};

// Lattice point outside the domain next to the cells, tied to the wall point
// on the ray from the domain center. Carries the emitted density for incoming
// velocities.
struct TransportSolver::Ghost {
  int wall_j = 0;
  double wall_t = 0.0;
  Vec2 normal;
};

namespace {

void wall_position(double s, int M, int& j, double& t) {
  const double u = s * M / (2.0 * kPi);
  const double fl = std::floor(u);
  j = static_cast<int>(fl) % M;
  t = u - fl;
}

}  // namespace

TransportSolver::TransportSolver(ConvexDomain domain, std::optional<CollisionKernel> kernel, SchemeParams params,
                                 BoundaryModel wall)
    : domain_(std::move(domain)), kernel_(std::move(kernel)), params_(params), wall_(wall) {
  const SchemeParams& p = params_;
  if (!(p.dt > 0.0) || !(p.h_x > 0.0) || !(p.h_v > 0.0) || !(p.v_max > 0.0))
    throw InvalidArgument("transport: dt, h_x, h_v and v_max must be positive");
  if (!(p.cfl_factor > 0.0 && p.cfl_factor <= 4.0)) throw InvalidArgument("transport: cfl_factor must lie in (0, 4]");
  if (p.dt * p.v_max > p.cfl_factor * p.h_x)
    throw InvalidArgument("transport: CFL condition dt * v_max <= cfl_factor * h_x violated");
  if (p.wall_samples < 8) throw InvalidArgument("transport: at least 8 wall samples are required");

  space_ = std::make_shared<SpatialGrid>(domain_, p.h_x);
  vel_ = std::make_shared<VelocityGrid>(p.v_max, p.h_v);
  if (kernel_) {
    ops_ = std::make_unique<CollisionOperators>(vel_, *kernel_, p.n_sigma, p.eps);
    kappa_ = p.equilibrium_correction ? ops_->equilibrium_factor(wall_.temperature())
                                      : std::vector<double>(vel_->size(), 1.0);
  }

  const int M = p.wall_samples;
  for (int j = 0; j < M; ++j) {
    const Vec2 x = domain_.boundary_point(2.0 * kPi * j / M);
    const Vec2 g = domain_.gradient(x);
    wall_points_.push_back(x);
    wall_normals_.push_back(g / norm(g));
    wall_stencils_.push_back(space_->stencil(x));
    wall_z_.push_back(discrete_normalization(wall_normals_.back()));
  }

  // ghosts: outside lattice points within two rings of a cell
  std::map<std::pair<int, int>, int> ghost_id;
  for (std::size_t c = 0; c < space_->size(); ++c)
    for (int dj = -2; dj <= 2; ++dj)
      for (int di = -2; di <= 2; ++di) {
        const int i = space_->lattice_i(c) + di;
        const int j = space_->lattice_j(c) + dj;
        if (space_->cell(i, j) >= 0 || ghost_id.count({i, j})) continue;
        const Vec2 z = space_->lattice_point(i, j);
        const RayContact rc = domain_.forward_contact(domain_.center(), z - domain_.center());
        if (!rc.hit) throw NumericalAbort("transport: wall projection of a ghost point failed");
        Ghost g;
        wall_position(domain_.boundary_parameter(rc.x_contact), M, g.wall_j, g.wall_t);
        g.normal = rc.normal;
        ghost_id[{i, j}] = static_cast<int>(ghosts_.size());
        ghosts_.push_back(g);
      }

  // upstream stencil: cells, plus ghosts for velocities entering through the
  // wall next to them; other missing corners are dropped and the rest renormalized
  auto foot_stencil = [&](Vec2 y, Vec2 v) {
    Stencil s;
    double total = 0.0;
    for (const auto& q : space_->corners(y)) {
      if (q.w <= 0.0) continue;
      int idx = q.cell;
      if (idx < 0) {
        const auto it = ghost_id.find({q.i, q.j});
        if (it == ghost_id.end() || !(dot(v, ghosts_[static_cast<std::size_t>(it->second)].normal) < 0.0)) continue;
        idx = -(it->second + 1);
      }
      s.idx[s.n] = idx;
      s.w[s.n] = q.w;
      total += q.w;
      ++s.n;
    }
    if (total <= 1e-12) return space_->stencil(y);
    for (int q = 0; q < s.n; ++q) s.w[q] /= total;
    return s;
  };

  const std::size_t nc = space_->size();
  const std::size_t nv = vel_->size();
  chars_.resize(nc * nv);
  std::vector<long> grazing(nc, 0);
  parallel_for(nc, [&](std::size_t c) {
    const Vec2 x = space_->center(c);
    for (std::size_t k = 0; k < nv; ++k) {
      Characteristic& ch = chars_[c * nv + k];
      const Vec2 v = vel_->velocity(k);
      if (norm2(v) == 0.0) {
        ch.foot = space_->stencil(x);
        continue;
      }
      const Vec2 y = x - v * p.dt;
      // convexity: an interior foot point means the whole segment is interior
      RayContact rc;
      if (!domain_.contains(y)) rc = domain_.backward_contact(x, v, p.dt);
      if (!rc.hit) {
        ch.foot = foot_stencil(y, v);
        continue;
      }
      if (rc.grazing || rc.t_contact <= 0.0) {
        ch.branch = Characteristic::Branch::Grazing;
        ch.foot = space_->stencil(rc.x_contact);
        ++grazing[c];
        continue;
      }
      ch.branch = Characteristic::Branch::Contact;
      wall_position(domain_.boundary_parameter(rc.x_contact), M, ch.wall_j, ch.wall_t);
    }
  });
  for (long g : grazing) grazing_ += g;
}

TransportSolver::~TransportSolver() = default;
TransportSolver::TransportSolver(TransportSolver&&) noexcept = default;

DistributionField TransportSolver::initial_field(const InitialData& init) const {
  if (!(init.rho >= 0.0) || !(init.T > 0.0) || !(init.x_radius > 0.0) || !(init.v_radius > 0.0))
    throw InvalidArgument("initial data: rho >= 0 and positive T and radii are required");
  DistributionField f(space_, vel_);
  for (std::size_t c = 0; c < f.cells(); ++c)
    for (std::size_t k = 0; k < f.nodes(); ++k) f(c, k) = init.eval(space_->center(c), vel_->velocity(k));
  return f;
}

double TransportSolver::discrete_normalization(Vec2 n) const {
  const double T = wall_.temperature();
  double z = 0.0;
  for (std::size_t k = 0; k < vel_->size(); ++k) {
    const Vec2 v = vel_->velocity(k);
    const double vn = dot(v, n);
    if (vn < 0.0) z += vel_->weight(k) * (-vn) * std::exp(-norm2(v) / (2.0 * T));
  }
  if (!(z > 0.0)) throw NumericalAbort("wall normalization vanished on the velocity grid");
  return z;
}

double TransportSolver::wall_outflux(const DistributionField& f, Vec2 x_wall, Vec2 n) const {
  const Stencil s = space_->stencil(x_wall);
  double out = 0.0;
  for (std::size_t k = 0; k < vel_->size(); ++k) {
    const double vn = dot(vel_->velocity(k), n);
    if (vn > 0.0) out += vel_->weight(k) * vn * apply(s, f.values(), f.nodes(), k);
  }
  return out;
}

StepStats TransportSolver::stats(const DistributionField& f) const {
  StepStats st;
  st.t = f.time;
  st.mass = f.mass();
  st.min_f = f.min();
  st.max_f = f.max();
  st.grazing_count = grazing_;
  return st;
}

void TransportSolver::collide(DistributionField& f, std::vector<double>& clamped) const {
  const std::size_t nv = vel_->size();
  const double dt = params_.dt;
  std::vector<double> L(nv), G(nv), S(nv, 0.0), Q1(nv, 0.0), base(nv), gain(nv);
  // cells in order; the operators parallelize over velocity nodes
  for (std::size_t c = 0; c < f.cells(); ++c) {
    const auto fc = f.slice(c);
    ops_->loss(fc, L);
    ops_->gain(fc, fc, G);
    if (ops_->noncutoff()) {
      ops_->s_weight(fc, S);
      ops_->q1(fc, fc, Q1);
    }
    // f -> e^{-dt lambda} f + dt phi1(dt lambda) (c kappa Q+ + Q1), lambda = L + S
    double m_old = 0.0, m_base = 0.0, m_gain = 0.0;
    for (std::size_t k = 0; k < nv; ++k) {
      double lam = L[k] + S[k];
      double extra = Q1[k];
      if (lam < 0.0) {
        extra -= lam * fc[k];
        lam = 0.0;
      }
      const double z = dt * lam;
      const double p = dt * phi1(z);
      base[k] = std::exp(-z) * fc[k] + p * extra;
      gain[k] = p * kappa_[k] * G[k];
      const double w = vel_->weight(k);
      m_old += w * fc[k];
      m_base += w * base[k];
      m_gain += w * gain[k];
    }
    double scale = 1.0;
    if (params_.collision_mass_fix && m_gain > 0.0) {
      const double r = (m_old - m_base) / m_gain;
      if (r >= 0.0 && std::isfinite(r)) scale = r;
    }
    for (std::size_t k = 0; k < nv; ++k) {
      double val = base[k] + scale * gain[k];
      if (!std::isfinite(val)) throw NumericalAbort("collision step: non-finite value in the distribution");
      if (val < 0.0) {
        clamped[c] -= vel_->weight(k) * val;
        val = 0.0;
      }
      fc[k] = val;
    }
  }
}

StepStats TransportSolver::step(DistributionField& f) const {
  if (&f.space() != space_.get() || &f.velocity() != vel_.get())
    throw InvalidArgument("step: field does not live on this solver's grids");
  const std::size_t nc = space_->size();
  const std::size_t nv = vel_->size();
  const auto values = f.values();
  const double T = wall_.temperature();

  // outflux at the wall samples; the emitted density is a_j exp(-|v|^2/2T) with
  // a_j = outflux / Z_disc(n_j), interpolated in the boundary parameter
  const int M = params_.wall_samples;
  std::vector<double> a(static_cast<std::size_t>(M));
  double imbalance = 0.0;
  for (int j = 0; j < M; ++j) {
    const Vec2 n = wall_normals_[j];
    double out = 0.0, emitted = 0.0;
    for (std::size_t k = 0; k < nv; ++k) {
      const double vn = dot(vel_->velocity(k), n);
      if (vn > 0.0) out += vel_->weight(k) * vn * apply(wall_stencils_[j], values, nv, k);
    }
    a[j] = out / wall_z_[j];
    for (std::size_t k = 0; k < nv; ++k) {
      const Vec2 v = vel_->velocity(k);
      const double vn = dot(v, n);
      if (vn < 0.0) emitted += vel_->weight(k) * (-vn) * a[j] * std::exp(-norm2(v) / (2.0 * T));
    }
    if (out > 0.0) imbalance = std::max(imbalance, std::abs(emitted - out) / out);
  }
  auto wall_coeff = [&](int j, double t) { return (1.0 - t) * a[j] + t * a[(j + 1) % M]; };
  std::vector<double> ghost_a(ghosts_.size());
  for (std::size_t g = 0; g < ghosts_.size(); ++g) ghost_a[g] = wall_coeff(ghosts_[g].wall_j, ghosts_[g].wall_t);
  std::vector<double> emit(nv);
  for (std::size_t k = 0; k < nv; ++k) emit[k] = std::exp(-norm2(vel_->velocity(k)) / (2.0 * T));

  // transport: split each upstream value into its cell part and its wall part
  std::vector<double> cell_part(nc * nv), wall_part(nc * nv);
  std::vector<double> cell_mass(nc, 0.0), wall_mass(nc, 0.0);
  parallel_for(nc, [&](std::size_t c) {
    for (std::size_t k = 0; k < nv; ++k) {
      const Characteristic& ch = chars_[c * nv + k];
      double from_cells = 0.0, from_wall = 0.0;
      if (ch.branch == Characteristic::Branch::Contact) {
        from_wall = wall_coeff(ch.wall_j, ch.wall_t) * emit[k];
      } else {
        for (int q = 0; q < ch.foot.n; ++q) {
          const int idx = ch.foot.idx[q];
          if (idx >= 0)
            from_cells += ch.foot.w[q] * values[static_cast<std::size_t>(idx) * nv + k];
          else
            from_wall += ch.foot.w[q] * ghost_a[static_cast<std::size_t>(-idx - 1)] * emit[k];
        }
      }
      cell_part[c * nv + k] = from_cells;
      wall_part[c * nv + k] = from_wall;
      cell_mass[c] += vel_->weight(k) * from_cells;
      wall_mass[c] += vel_->weight(k) * from_wall;
    }
  });
  double alpha = 1.0;
  if (params_.conservative_wall) {
    double old_mass = 0.0, cm = 0.0, wm = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t k = 0; k < nv; ++k) old_mass += vel_->weight(k) * values[c * nv + k];
      cm += cell_mass[c];
      wm += wall_mass[c];
    }
    if (wm > 0.0) alpha = std::max(0.0, (old_mass - cm) / wm);
  }
  auto& out = f.mutable_values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = cell_part[i] + alpha * wall_part[i];
    if (!std::isfinite(out[i])) throw NumericalAbort("transport step: non-finite value in the distribution");
  }

  std::vector<double> clamped(nc, 0.0);
  if (ops_) collide(f, clamped);
  f.time += params_.dt;

  StepStats st = stats(f);
  double cm = 0.0;
  for (double x : clamped) cm += x;
  st.clamped_mass = cm * space_->h() * space_->h();
  st.flux_imbalance = imbalance;
  st.emission_scale = alpha;
  return st;
}

RunResult run(const TransportSolver& solver, const InitialData& init, double t_end,
              const std::vector<double>& snapshot_times) {
  const double dt = solver.params().dt;
  if (!(t_end >= 0.0)) throw InvalidArgument("run: t_end must be nonnegative");
  const double steps_real = t_end / dt;
  const long steps = std::lround(steps_real);
  if (std::abs(steps_real - steps) > 1e-6) throw InvalidArgument("run: t_end must be a multiple of dt");
  std::vector<long> snap_steps;
  for (double t : snapshot_times) {
    if (t < 0.0 || t > t_end + 1e-12) throw InvalidArgument("run: snapshot time outside [0, t_end]");
    snap_steps.push_back(std::lround(t / dt));
  }
  RunResult out;
  DistributionField f = solver.initial_field(init);
  out.series.push_back(solver.stats(f));
  auto keep = [&](long n) {
    for (long s : snap_steps)
      if (s == n) {
        out.snapshots.push_back(f);
        break;
      }
  };
  keep(0);
  for (long n = 1; n <= steps; ++n) {
    out.series.push_back(solver.step(f));
    keep(n);
  }
  return out;
}

}  // namespace boltzwall
