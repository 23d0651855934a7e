#include "boltzwall/operators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>

#include "boltzwall/parallel.hpp"
#include "boltzwall/quadrature.hpp"

namespace boltzwall {

PostCollision post_collision(Vec2 v, Vec2 v_star, Vec2 sigma) {
  const Vec2 mid = (v + v_star) * 0.5;
  const Vec2 u = v - v_star;
  const double r = norm(u);
  PostCollision pc;
  pc.v_prime = mid + sigma * (0.5 * r);
  pc.v_star_prime = mid - sigma * (0.5 * r);
  pc.cos_theta = (r > 0.0) ? dot(u, sigma) / r : 1.0;
  return pc;
}

double AngularRule::total() const {
  double s = 0.0;
  for (double w : weight) s += w;
  return s;
}

namespace {

constexpr int kPanelNodes = 4;
constexpr int kSingularPanels = 40;

// Composite Gauss-Legendre on [lo, hi]; panels no wider than max_width.
void add_panels(const AngularKernel& b, double lo, double hi, double max_width, std::vector<double>& theta,
                std::vector<double>& w) {
  const int m = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_width)));
  for (int k = 0; k < m; ++k) {
    const double a = lo + (hi - lo) * k / m;
    const double c = lo + (hi - lo) * (k + 1) / m;
    const auto r = quad::gauss_legendre(kPanelNodes, a, c);
    for (int i = 0; i < kPanelNodes; ++i) {
      theta.push_back(r.nodes[i]);
      w.push_back(r.weights[i] * b.eval(r.nodes[i]));
    }
  }
}

// Graded panels [lo 2^k, lo 2^{k+1}] covering [lo, hi].
void add_graded(const AngularKernel& b, double lo, double hi, double max_width, std::vector<double>& theta,
                std::vector<double>& w) {
  double a = lo;
  while (a < hi) {
    const double c = std::min(hi, 2.0 * a);
    add_panels(b, a, c, max_width, theta, w);
    a = c;
  }
}

AngularRule mirror(const std::vector<double>& theta, const std::vector<double>& w) {
  AngularRule r;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i] == 0.0) {
      r.phi.push_back(0.0);
      r.weight.push_back(w[i]);
      continue;
    }
    r.phi.push_back(theta[i]);
    r.weight.push_back(w[i]);
    r.phi.push_back(-theta[i]);
    r.weight.push_back(w[i]);
  }
  return r;
}

}  // namespace

AngularRule cutoff_rule(const AngularKernel& b, int n_sigma) {
  if (!b.integrable()) throw InvalidArgument("cutoff_rule: angular kernel is not integrable");
  if (b.dim() != 2) throw InvalidArgument("cutoff_rule: velocity quadrature is two-dimensional");
  if (b.family() == AngularKernel::Family::Constant && b.side() == AngularKernel::Side::Full) {
    SphereQuadrature sq(n_sigma);
    AngularRule r;
    r.phi = sq.phi;
    for (double w : sq.weight) r.weight.push_back(w * b.value());
    return r;
  }
  if (b.side() == AngularKernel::Side::NCO) throw InvalidArgument("cutoff_rule: NCO part is not a cutoff kernel");
  const double max_width = kPanelNodes * 2.0 * kPi / n_sigma;
  std::vector<double> theta, w;
  const double half = 0.5 * kPi;
  if (b.side() == AngularKernel::Side::CO) {
    const double lo = b.eps();
    if (lo < half) add_graded(b, lo, half, max_width, theta, w);
    add_panels(b, std::max(lo, half), kPi, max_width, theta, w);
  } else if (b.family() == AngularKernel::Family::Singular) {
    // untruncated integrable singular kernel (nu < 0): panels toward 0 and an
    // end node at theta = 0 carrying the analytic remainder of the weight
    double hi = half;
    for (int k = 0; k < kSingularPanels; ++k) {
      add_panels(b, 0.5 * hi, hi, max_width, theta, w);
      hi *= 0.5;
    }
    theta.push_back(0.0);
    w.push_back(b.b0() * std::pow(hi, -b.nu()) / (-b.nu()));
    add_panels(b, half, kPi, max_width, theta, w);
  } else {
    add_panels(b, 0.0, kPi, max_width, theta, w);
  }
  // rescale so the rule integrates b exactly; the loss term uses the same n_b
  AngularRule r = mirror(theta, w);
  const double scale = compute_n_b(b) / r.total();
  for (double& x : r.weight) x *= scale;
  return r;
}

Observables observables(const VelocityGrid& grid, std::span<const double> f, double p, double gamma) {
  if (f.size() != grid.size()) throw InvalidArgument("observables: size mismatch");
  if (!(p >= 1.0)) throw InvalidArgument("observables: p must be >= 1");
  Observables o;
  o.p = p;
  const double gt = std::max(0.0, 2.0 + gamma);
  double lp = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double w = grid.weight(k);
    const double v2 = norm2(grid.velocity(k));
    const double fk = f[k];
    o.rho += w * fk;
    o.energy += w * v2 * fk;
    o.weighted_energy += w * std::pow(std::sqrt(v2), gt) * fk;
    o.l1_weighted += w * std::pow(std::sqrt(1.0 + v2), gt) * std::abs(fk);
    lp += w * std::pow(std::abs(fk), p);
    if (fk > 0.0) o.entropy += w * fk * std::log(fk);
  }
  o.lp = std::pow(lp, 1.0 / p);
  std::vector<double> pad(grid.padded_size());
  grid.scatter(f, pad);
  const int s = grid.stride();
  const double h = grid.h();
  double sup = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const int c = grid.padded_index(k);
    const double fx = (pad[c + 1] - pad[c - 1]) / (2 * h);
    const double fy = (pad[c + s] - pad[c - s]) / (2 * h);
    const double fxx = (pad[c + 1] - 2 * pad[c] + pad[c - 1]) / (h * h);
    const double fyy = (pad[c + s] - 2 * pad[c] + pad[c - s]) / (h * h);
    const double fxy = (pad[c + s + 1] - pad[c + s - 1] - pad[c - s + 1] + pad[c - s - 1]) / (4 * h * h);
    sup = std::max({sup, std::abs(pad[c]), std::abs(fx), std::abs(fy), std::abs(fxx), std::abs(fyy),
                    std::abs(fxy)});
  }
  o.w2inf = sup;
  return o;
}

BoundConstants bound_constants(const Observables& obs, const KineticPotential& phi, double n_b, double m_b,
                               const CalibratedConstants& cst) {
  constexpr int d = 2;
  double moment = obs.energy;
  if (phi.form == KineticPotential::Form::Power && phi.gamma < 0.0) {
    if (!(obs.p > d / (d + phi.gamma)))
      throw InvalidArgument("bound_constants: soft potential needs p > d/(d+gamma)");
    moment += obs.lp;
  }
  return {cst.cst_L * n_b * phi.C_phi * moment, cst.cst_S * m_b * phi.C_phi * moment};
}

// ---------------------------------------------------------------------------
// Stencils

namespace {

struct Bilinear {
  int base;
  double a[4];
};

Bilinear bilinear(Vec2 o, double h, int stride) {
  const double fx = o.x / h, fy = o.y / h;
  const double ix = std::floor(fx), iy = std::floor(fy);
  const double tx = fx - ix, ty = fy - iy;
  Bilinear b;
  b.base = static_cast<int>(ix) + stride * static_cast<int>(iy);
  b.a[0] = (1 - tx) * (1 - ty);
  b.a[1] = tx * (1 - ty);
  b.a[2] = (1 - tx) * ty;
  b.a[3] = tx * ty;
  return b;
}

inline double read(const double* p, const Bilinear& b, int s) {
  const double* q = p + b.base;
  return b.a[0] * q[0] + b.a[1] * q[1] + b.a[2] * q[s] + b.a[3] * q[s + 1];
}

}  // namespace

struct CollisionOperators::GainTable {
  struct Tap {
    Bilinear o1, o2;
    double c;
  };
  int side = 0;  // 4N + 1
  std::vector<int> start;
  std::vector<Tap> taps;
};

struct CollisionOperators::NcoTable {
  struct Tap {
    Bilinear o1, o2, o3;
    double c;
  };
  struct Cell {
    int begin = 0, end = 0;
    double len = 0.0, ux = 0.0, uy = 0.0;  // |u| and unit direction
    double m1 = 0.0, m2 = 0.0, m3 = 0.0;   // Taylor-zone moments
  };
  int side = 0;
  std::vector<Cell> cells;
  std::vector<Tap> taps;
};

namespace {

// Moments int_0^a b(theta) w(theta) for w = 1 - cos, (1 - cos)^2, sin^2.
std::array<double, 3> taylor_moments(const AngularKernel& b, double a) {
  auto f1 = [&](double t) {
    const double s = std::sin(0.5 * t);
    return b.eval_untruncated(t) * 2.0 * s * s;
  };
  auto f2 = [&](double t) {
    const double s = std::sin(0.5 * t);
    return b.eval_untruncated(t) * 4.0 * s * s * s * s;
  };
  auto f3 = [&](double t) {
    const double s = std::sin(t);
    return b.eval_untruncated(t) * s * s;
  };
  return {quad::integrate_left_singular(f1, a, 1e-10), quad::integrate_left_singular(f2, a, 1e-10),
          quad::integrate_left_singular(f3, a, 1e-10)};
}

}  // namespace

CollisionOperators::CollisionOperators(std::shared_ptr<const VelocityGrid> grid, CollisionKernel kernel,
                                       int n_sigma, std::optional<double> eps)
    : grid_(std::move(grid)), kernel_(std::move(kernel)), b_co_(kernel_.b), n_sigma_(n_sigma) {
  if (kernel_.b.dim() != 2) throw InvalidArgument("collision operators: velocity grid is two-dimensional");
  if (kernel_.b.side() != AngularKernel::Side::Full)
    throw InvalidArgument("collision operators: pass the untruncated kernel and a split angle");
  if (eps) {
    auto [co, nco] = split_at(kernel_.b, *eps);
    b_co_ = co;
    b_nco_ = nco;
  } else if (!kernel_.b.integrable()) {
    throw InvalidArgument("collision operators: non-integrable angular kernel needs a split angle eps");
  }
  n_b_ = compute_n_b(b_co_);
  l_b_ = compute_l_b(b_co_);
  m_b_ = b_nco_ ? compute_m_b(*b_nco_) : 0.0;

  const VelocityGrid& g = *grid_;
  const int N = g.half_width();
  const int side = 4 * N + 1;
  const double h = g.h();
  const int s = g.stride();
  const double umax = 2.0 * g.v_max() * (1.0 + 1e-12);
  const bool soft_power = kernel_.phi.form == KineticPotential::Form::Power && kernel_.phi.gamma < 0.0;

  phi_u_.assign(static_cast<std::size_t>(side) * side, 0.0);
  for (int b = -2 * N; b <= 2 * N; ++b)
    for (int a = -2 * N; a <= 2 * N; ++a) {
      const double r = h * std::hypot(a, b);
      double val = 0.0;
      if (r == 0.0)
        val = soft_power ? 0.0 : kernel_.phi.eval(0.0);
      else if (r <= umax)
        val = kernel_.phi.eval(r);
      phi_u_[(a + 2 * N) + side * (b + 2 * N)] = val;
    }

  const AngularRule rule = cutoff_rule(b_co_, n_sigma_);
  // folded rule: phi -> phi mod pi, merging coincident nodes
  AngularRule folded;
  {
    std::map<long long, std::size_t> seen;
    for (std::size_t k = 0; k < rule.phi.size(); ++k) {
      double psi = rule.phi[k] < 0.0 ? rule.phi[k] + kPi : rule.phi[k];
      if (psi >= kPi) psi -= kPi;
      const long long key = std::llround(psi * 1e12);
      auto it = seen.find(key);
      if (it == seen.end()) {
        seen[key] = folded.phi.size();
        folded.phi.push_back(psi);
        folded.weight.push_back(rule.weight[k]);
      } else {
        folded.weight[it->second] += rule.weight[k];
      }
    }
  }

  auto build = [&](const AngularRule& ar) {
    auto t = std::make_unique<GainTable>();
    t->side = side;
    t->start.assign(static_cast<std::size_t>(side) * side + 1, 0);
    for (int b = -2 * N; b <= 2 * N; ++b)
      for (int a = -2 * N; a <= 2 * N; ++a) {
        const int idx = (a + 2 * N) + side * (b + 2 * N);
        t->start[idx] = static_cast<int>(t->taps.size());
        const double c0 = phi_u_[idx];
        if (c0 == 0.0) continue;
        const Vec2 u{a * h, b * h};
        const double r = norm(u);
        const Vec2 uh = (r > 0.0) ? u / r : Vec2{1.0, 0.0};
        for (std::size_t k = 0; k < ar.phi.size(); ++k) {
          const Vec2 sigma = rotate(uh, ar.phi[k]);
          const Vec2 o1 = (-u + sigma * r) * 0.5;
          const Vec2 o2 = (-u - sigma * r) * 0.5;
          t->taps.push_back({bilinear(o1, h, s), bilinear(o2, h, s), c0 * ar.weight[k]});
        }
      }
    t->start.back() = static_cast<int>(t->taps.size());
    return t;
  };
  full_ = build(rule);
  if (folded.phi.size() < rule.phi.size()) folded_ = build(folded);

  if (b_nco_) {
    const double e = b_nco_->eps();
    nco_ = std::make_unique<NcoTable>();
    nco_->side = side;
    nco_->cells.resize(static_cast<std::size_t>(side) * side);
    std::map<long long, std::array<double, 3>> moment_cache;
    for (int b = -2 * N; b <= 2 * N; ++b)
      for (int a = -2 * N; a <= 2 * N; ++a) {
        const int idx = (a + 2 * N) + side * (b + 2 * N);
        auto& cell = nco_->cells[idx];
        cell.begin = cell.end = static_cast<int>(nco_->taps.size());
        const double c0 = phi_u_[idx];
        if (c0 == 0.0 || (a == 0 && b == 0)) continue;
        const Vec2 u{a * h, b * h};
        const double r = norm(u);
        cell.len = r;
        cell.ux = u.x / r;
        cell.uy = u.y / r;
        // Taylor zone: displacement |o| = r sin(theta/2) below one lattice spacing
        const double at = 2.0 * std::asin(std::min(1.0, h / r));
        const double az = std::min(at, e);
        const long long key = static_cast<long long>(a) * a + static_cast<long long>(b) * b;
        auto it = moment_cache.find(key);
        if (it == moment_cache.end()) it = moment_cache.emplace(key, taylor_moments(*b_nco_, az)).first;
        cell.m1 = it->second[0];
        cell.m2 = it->second[1];
        cell.m3 = it->second[2];
        if (at < e) {
          std::vector<double> theta, w;
          add_graded(*b_nco_, at, e, kPanelNodes * 2.0 * kPi / n_sigma_, theta, w);
          const AngularRule dr = mirror(theta, w);
          const Vec2 uh = u / r;
          for (std::size_t k = 0; k < dr.phi.size(); ++k) {
            const Vec2 sigma = rotate(uh, dr.phi[k]);
            const Vec2 o1 = (-u + sigma * r) * 0.5;
            const Vec2 o2 = (-u - sigma * r) * 0.5;
            nco_->taps.push_back({bilinear(o1, h, s), bilinear(o2, h, s), bilinear(-o1, h, s), dr.weight[k]});
          }
        }
        cell.end = static_cast<int>(nco_->taps.size());
      }
  }
}

CollisionOperators::~CollisionOperators() = default;
CollisionOperators::CollisionOperators(CollisionOperators&&) noexcept = default;

void CollisionOperators::loss(std::span<const double> g, std::span<double> out) const {
  const VelocityGrid& G = *grid_;
  const int N = G.half_width();
  const int side = 4 * N + 1;
  const std::size_t n = G.size();
  std::vector<double> wg(n);
  for (std::size_t m = 0; m < n; ++m) wg[m] = G.weight(m) * g[m];
  parallel_for(n, [&](std::size_t k) {
    const int ik = G.lattice_i(k), jk = G.lattice_j(k);
    double acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const int a = ik - G.lattice_i(m) + 2 * N;
      const int b = jk - G.lattice_j(m) + 2 * N;
      acc += phi_u_[a + side * b] * wg[m];
    }
    out[k] = n_b_ * acc;
  });
}

void CollisionOperators::gain(std::span<const double> g, std::span<const double> h,
                              std::span<double> out) const {
  const VelocityGrid& G = *grid_;
  const int N = G.half_width();
  const int side = 4 * N + 1;
  const int s = G.stride();
  const std::size_t n = G.size();
  const bool same = g.data() == h.data() && folded_;
  const GainTable& T = same ? *folded_ : *full_;
  std::vector<double> pg(G.padded_size()), ph;
  G.scatter(g, pg);
  const double* PG = pg.data();
  const double* PH = PG;
  if (!same) {
    ph.resize(G.padded_size());
    G.scatter(h, ph);
    PH = ph.data();
  }
  parallel_for(n, [&](std::size_t k) {
    const int ik = G.lattice_i(k), jk = G.lattice_j(k);
    const double* gv = PG + G.padded_index(k);
    const double* hv = PH + G.padded_index(k);
    double acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const int idx = (ik - G.lattice_i(m) + 2 * N) + side * (jk - G.lattice_j(m) + 2 * N);
      const int b0 = T.start[idx], b1 = T.start[idx + 1];
      double sum = 0.0;
      for (int t = b0; t < b1; ++t) {
        const auto& tp = T.taps[t];
        sum += tp.c * read(hv, tp.o1, s) * read(gv, tp.o2, s);
      }
      acc += G.weight(m) * sum;
    }
    out[k] = acc;
  });
}

namespace {

struct Derivs {
  std::vector<double> gx, gy, hxx, hxy, hyy;
};

Derivs derivatives(const VelocityGrid& G, const std::vector<double>& pad) {
  const std::size_t n = G.size();
  const int s = G.stride();
  const double h = G.h();
  Derivs d;
  d.gx.resize(n);
  d.gy.resize(n);
  d.hxx.resize(n);
  d.hxy.resize(n);
  d.hyy.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const int c = G.padded_index(k);
    d.gx[k] = (pad[c + 1] - pad[c - 1]) / (2 * h);
    d.gy[k] = (pad[c + s] - pad[c - s]) / (2 * h);
    d.hxx[k] = (pad[c + 1] - 2 * pad[c] + pad[c - 1]) / (h * h);
    d.hyy[k] = (pad[c + s] - 2 * pad[c] + pad[c - s]) / (h * h);
    d.hxy[k] = (pad[c + s + 1] - pad[c + s - 1] - pad[c - s + 1] + pad[c - s - 1]) / (4 * h * h);
  }
  return d;
}

}  // namespace

void CollisionOperators::s_weight(std::span<const double> g, std::span<double> out) const {
  const VelocityGrid& G = *grid_;
  const std::size_t n = G.size();
  if (!nco_) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const int N = G.half_width();
  const int side = 4 * N + 1;
  const int s = G.stride();
  std::vector<double> pg(G.padded_size());
  G.scatter(g, pg);
  const Derivs D = derivatives(G, pg);
  const NcoTable& T = *nco_;
  parallel_for(n, [&](std::size_t k) {
    const int ik = G.lattice_i(k), jk = G.lattice_j(k);
    double acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const int idx = (ik - G.lattice_i(m) + 2 * N) + side * (jk - G.lattice_j(m) + 2 * N);
      const auto& cell = T.cells[idx];
      if (cell.len == 0.0) continue;
      const double* gm = pg.data() + G.padded_index(m);
      double direct = 0.0;
      for (int t = cell.begin; t < cell.end; ++t) direct += T.taps[t].c * (read(gm, T.taps[t].o3, s) - g[m]);
      const double ux = cell.ux, uy = cell.uy;
      const double du = D.gx[m] * ux + D.gy[m] * uy;
      const double huu = ux * ux * D.hxx[m] + 2 * ux * uy * D.hxy[m] + uy * uy * D.hyy[m];
      const double hpp = uy * uy * D.hxx[m] - 2 * ux * uy * D.hxy[m] + ux * ux * D.hyy[m];
      const double L = cell.len;
      const double taylor = L * cell.m1 * du + 0.25 * L * L * (cell.m2 * huu + cell.m3 * hpp);
      acc += G.weight(m) * phi_u_[idx] * (direct + taylor);
    }
    out[k] = -acc;
  });
}

void CollisionOperators::q1(std::span<const double> g, std::span<const double> h, std::span<double> out) const {
  const VelocityGrid& G = *grid_;
  const std::size_t n = G.size();
  if (!nco_) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const int N = G.half_width();
  const int side = 4 * N + 1;
  const int s = G.stride();
  std::vector<double> pg(G.padded_size()), ph(G.padded_size());
  G.scatter(g, pg);
  G.scatter(h, ph);
  const Derivs Dg = derivatives(G, pg);
  const Derivs Dh = derivatives(G, ph);
  const NcoTable& T = *nco_;
  parallel_for(n, [&](std::size_t k) {
    const int ik = G.lattice_i(k), jk = G.lattice_j(k);
    const double* gv = pg.data() + G.padded_index(k);
    const double* hv = ph.data() + G.padded_index(k);
    double acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const int idx = (ik - G.lattice_i(m) + 2 * N) + side * (jk - G.lattice_j(m) + 2 * N);
      const auto& cell = T.cells[idx];
      if (cell.len == 0.0) continue;
      double direct = 0.0;
      for (int t = cell.begin; t < cell.end; ++t) {
        const auto& tp = T.taps[t];
        direct += tp.c * read(gv, tp.o2, s) * (read(hv, tp.o1, s) - h[k]);
      }
      const double ux = cell.ux, uy = cell.uy;
      const double L = cell.len;
      const double hu = Dh.gx[k] * ux + Dh.gy[k] * uy;
      const double hp = -Dh.gx[k] * uy + Dh.gy[k] * ux;
      const double gu = Dg.gx[m] * ux + Dg.gy[m] * uy;
      const double gp = -Dg.gx[m] * uy + Dg.gy[m] * ux;
      const double huu = ux * ux * Dh.hxx[k] + 2 * ux * uy * Dh.hxy[k] + uy * uy * Dh.hyy[k];
      const double hpp = uy * uy * Dh.hxx[k] - 2 * ux * uy * Dh.hxy[k] + ux * ux * Dh.hyy[k];
      const double taylor = g[m] * (-L * cell.m1 * hu + 0.25 * L * L * (cell.m2 * huu + cell.m3 * hpp)) -
                            0.5 * L * L * (cell.m2 * gu * hu + cell.m3 * gp * hp);
      acc += G.weight(m) * phi_u_[idx] * (direct + taylor);
    }
    out[k] = acc;
  });
}

double CollisionOperators::loss_at(std::span<const double> g, std::size_t k) const {
  const VelocityGrid& G = *grid_;
  const int N = G.half_width();
  const int side = 4 * N + 1;
  double acc = 0.0;
  for (std::size_t m = 0; m < G.size(); ++m) {
    const int a = G.lattice_i(k) - G.lattice_i(m) + 2 * N;
    const int b = G.lattice_j(k) - G.lattice_j(m) + 2 * N;
    acc += phi_u_[a + side * b] * G.weight(m) * g[m];
  }
  return n_b_ * acc;
}

double CollisionOperators::gain_at(std::span<const double> g, std::span<const double> h, std::size_t k) const {
  const std::size_t nodes[1] = {k};
  return gain_at(g, h, nodes)[0];
}

std::vector<double> CollisionOperators::gain_at(std::span<const double> g, std::span<const double> h,
                                                std::span<const std::size_t> nodes, const SupportHint* hint) const {
  const VelocityGrid& G = *grid_;
  const int N = G.half_width();
  const int side = 4 * N + 1;
  const int s = G.stride();
  std::vector<double> pg(G.padded_size()), ph(G.padded_size());
  G.scatter(g, pg);
  G.scatter(h, ph);
  const GainTable& T = *full_;
  std::vector<double> out(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t q) {
    const std::size_t k = nodes[q];
    const double* gv = pg.data() + G.padded_index(k);
    const double* hv = ph.data() + G.padded_index(k);
    // v' in B(c, rh), v'_* in B(c, rg) force |v + v_* - 2c| <= rg + rh and
    // |v - c|^2 + |v_* - c|^2 <= rg^2 + rh^2
    Vec2 c2;
    double lin2 = 0.0, energy = 0.0;
    if (hint) {
      const Vec2 v = G.velocity(k);
      c2 = hint->center * 2.0 - v;
      lin2 = (hint->g_radius + hint->h_radius) * (hint->g_radius + hint->h_radius);
      energy = hint->g_radius * hint->g_radius + hint->h_radius * hint->h_radius - norm2(v - hint->center);
      if (energy < 0.0) {
        out[q] = 0.0;
        return;
      }
    }
    double acc = 0.0;
    for (std::size_t m = 0; m < G.size(); ++m) {
      if (hint) {
        const Vec2 w = G.velocity(m);
        if (norm2(w - c2) > lin2 || norm2(w - hint->center) > energy) continue;
      }
      const int idx =
          (G.lattice_i(k) - G.lattice_i(m) + 2 * N) + side * (G.lattice_j(k) - G.lattice_j(m) + 2 * N);
      double sum = 0.0;
      for (int t = T.start[idx]; t < T.start[idx + 1]; ++t) {
        const auto& tp = T.taps[t];
        sum += tp.c * read(hv, tp.o1, s) * read(gv, tp.o2, s);
      }
      acc += G.weight(m) * sum;
    }
    out[q] = acc;
  });
  return out;
}

std::vector<double> CollisionOperators::equilibrium_factor(double T) const {
  if (!(T > 0.0)) throw InvalidArgument("equilibrium_factor: temperature must be positive");
  const auto M = grid_->sample([T](Vec2 v) { return maxwellian(v, 1.0, T); });
  const auto Q = gain(M, M);
  const auto L = loss(M);
  std::vector<double> kappa(M.size(), 1.0);
  for (std::size_t k = 0; k < M.size(); ++k) {
    const double target = L[k] * M[k];
    if (Q[k] > 1e-300 && target > 1e-300) kappa[k] = target / Q[k];
  }
  return kappa;
}

std::vector<double> CollisionOperators::loss(std::span<const double> g) const {
  std::vector<double> out(grid_->size());
  loss(g, out);
  return out;
}

std::vector<double> CollisionOperators::gain(std::span<const double> g, std::span<const double> h) const {
  std::vector<double> out(grid_->size());
  gain(g, h, out);
  return out;
}

std::vector<double> CollisionOperators::s_weight(std::span<const double> g) const {
  std::vector<double> out(grid_->size());
  s_weight(g, out);
  return out;
}

std::vector<double> CollisionOperators::q1(std::span<const double> g, std::span<const double> h) const {
  std::vector<double> out(grid_->size());
  q1(g, h, out);
  return out;
}

double CollisionOperators::quadrature_tolerance() const {
  // Bilinear interpolation error of the product M(v') M(v'_*) for a unit
  // Maxwellian, bounded by (h^2/8)(|v|^2 + |v_*|^2 + 4) M(v) M(v_*) and
  // integrated against Phi b: n_b C_phi (h^2/8) sup_v (|v|^2 + 6) M(v).
  const double h = grid_->h();
  return n_b_ * kernel_.phi.C_phi * h * h / 8.0 * 6.0 / (2.0 * kPi);
}

std::vector<std::vector<double>> calibration_family(const VelocityGrid& grid, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nm(1, 3);
  std::uniform_real_distribution<double> ur(0.5, 2.0);
  std::uniform_real_distribution<double> ua(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> uc(0.0, 1.0);
  std::vector<std::vector<double>> out;
  for (int c = 0; c < count; ++c) {
    const int m = nm(rng);
    std::vector<double> f(grid.size(), 0.0);
    for (int j = 0; j < m; ++j) {
      const double rho = ur(rng), T = ur(rng);
      const Vec2 u = rotate({2.0 * std::sqrt(uc(rng)), 0.0}, ua(rng));
      for (std::size_t k = 0; k < grid.size(); ++k) f[k] += maxwellian(grid.velocity(k), rho, T, u);
    }
    out.push_back(std::move(f));
  }
  return out;
}

CalibratedConstants calibrate_bound_constants(const CollisionOperators& ops, int count, std::uint64_t seed,
                                              double p) {
  const VelocityGrid& G = ops.grid();
  const auto& phi = ops.kernel().phi;
  const double gt = std::max(0.0, 2.0 + phi.gamma);
  CalibratedConstants unit;
  unit.cst_L = unit.cst_S = unit.cst_Q1 = 1.0;
  double rL = 0.0, rS = 0.0, rQ = 0.0;
  for (const auto& f : calibration_family(G, count, seed)) {
    const Observables o = observables(G, f, p, phi.gamma);
    const BoundConstants bc = bound_constants(o, phi, ops.n_b(), ops.m_b(), unit);
    const auto L = ops.loss(f);
    std::vector<double> S, Q;
    if (ops.noncutoff()) {
      S = ops.s_weight(f);
      Q = ops.q1(f, f);
    }
    const double q1_scale = ops.m_b() * phi.C_phi * o.l1_weighted * o.w2inf;
    for (std::size_t k = 0; k < G.size(); ++k) {
      const double v = norm(G.velocity(k));
      if (v > 0.5 * G.v_max()) continue;
      const double wg = std::pow(bracket(v), phi.gamma_plus());
      rL = std::max(rL, std::abs(L[k]) / (bc.C_L * wg));
      if (ops.noncutoff()) {
        rS = std::max(rS, std::abs(S[k]) / (bc.C_S * wg));
        rQ = std::max(rQ, std::abs(Q[k]) / (q1_scale * std::pow(bracket(v), gt)));
      }
    }
  }
  CalibratedConstants c;
  c.cst_L = 1.05 * rL;
  c.cst_S = ops.noncutoff() ? 1.05 * rS : 0.0;
  c.cst_Q1 = ops.noncutoff() ? 1.05 * rQ : 0.0;
  c.samples = count;
  c.seed = seed;
  c.empirically_calibrated = true;
  return c;
}

}  // namespace boltzwall
