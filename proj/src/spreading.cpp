#include "boltzwall/spreading.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace boltzwall {

namespace {

constexpr int kRimPoints = 64;
constexpr int kSubcells = 16;

// Cell-averaged indicator of B(c, radius): fraction of the cell [v - h/2, v + h/2]^2
// inside the ball, by midpoint subsampling on cells crossing the circle.
std::vector<double> ball_indicator(const VelocityGrid& g, Vec2 c, double radius) {
  const double h = g.h();
  const double half_diag = h * std::sqrt(0.5);
  const double r2 = radius * radius;
  return g.sample([&](Vec2 v) {
    const double d = norm(v - c);
    if (d <= radius - half_diag) return 1.0;
    if (d >= radius + half_diag) return 0.0;
    int in = 0;
    for (int a = 0; a < kSubcells; ++a)
      for (int b = 0; b < kSubcells; ++b) {
        const Vec2 q{v.x + h * ((a + 0.5) / kSubcells - 0.5), v.y + h * ((b + 0.5) / kSubcells - 0.5)};
        if (norm2(q - c) <= r2) ++in;
      }
    return static_cast<double>(in) / (kSubcells * kSubcells);
  });
}

std::vector<std::size_t> ball_nodes(const VelocityGrid& g, Vec2 c, double radius) {
  std::vector<std::size_t> out;
  const double r2 = radius * radius * (1.0 + 1e-12);
  for (std::size_t k = 0; k < g.size(); ++k)
    if (norm2(g.velocity(k) - c) <= r2) out.push_back(k);
  return out;
}

}  // namespace

SpreadOracle::SpreadOracle(CollisionKernel kernel, double v_max, double h_v, int n_sigma)
    : ops_(std::make_shared<CollisionOperators>(std::make_shared<VelocityGrid>(v_max, h_v), std::move(kernel),
                                                n_sigma)) {}

SpreadOracle::SpreadOracle(std::shared_ptr<const CollisionOperators> ops) : ops_(std::move(ops)) {
  if (!ops_) throw InvalidArgument("spread oracle: null operators");
}

double SpreadOracle::shape_factor(const SpreadInputs& in) const {
  const int d = 2;
  const auto& phi = ops_->kernel().phi;
  return ops_->l_b() * phi.c_phi * std::pow(in.r, d - 3) * std::pow(in.R, 3.0 + phi.gamma) *
         std::pow(in.xi, 0.5 * d - 1.0);
}

std::vector<double> SpreadOracle::gain_field(const SpreadInputs& in) const {
  const VelocityGrid& g = ops_->grid();
  const auto big = ball_indicator(g, in.vbar, in.R);
  const auto small = ball_indicator(g, in.vbar, in.r);
  return ops_->gain(big, small);
}

SpreadReport SpreadOracle::verify(const SpreadInputs& in, double cst_Q) const {
  if (!(in.r > 0.0) || !(in.r <= in.R)) throw InvalidArgument("verify_spread: need 0 < r <= R");
  if (!(in.xi > 0.0 && in.xi < 1.0)) throw InvalidArgument("verify_spread: xi must lie in (0, 1)");
  const VelocityGrid& g = ops_->grid();
  if (g.h() > in.r / 4.0) throw InvalidArgument("verify_spread: grid too coarse to resolve r (h_v > r/4)");
  SpreadReport rep;
  rep.inputs = in;
  rep.target_radius = std::hypot(in.r, in.R) * (1.0 - in.xi);
  if (norm(in.vbar) + in.r + in.R + rep.target_radius + g.h() > g.v_max())
    throw InvalidArgument("verify_spread: velocity grid does not contain the collision region");
  const auto nodes = ball_nodes(g, in.vbar, rep.target_radius);
  const auto big = ball_indicator(g, in.vbar, in.R);
  const auto small = ball_indicator(g, in.vbar, in.r);
  // interpolated cell averages vanish beyond radius + h (sqrt(2)/2 + 1)
  const double pad = 2.0 * g.h();
  CollisionOperators::SupportHint hint{in.vbar, in.R + pad, in.r + pad};
  auto q = ops_->gain_at(big, small, nodes, &hint);
  // Points on the target circle: the operator commutes with translations, so
  // Q+ at p equals Q+ of the inputs shifted by (node(p) - p) at the nearest node.
  for (int m = 0; m < kRimPoints; ++m) {
    const double a = 2.0 * kPi * m / kRimPoints;
    const Vec2 p = in.vbar + Vec2{std::cos(a), std::sin(a)} * rep.target_radius;
    const int k = g.node(static_cast<int>(std::lround(p.x / g.h())), static_cast<int>(std::lround(p.y / g.h())));
    if (k < 0) throw InvalidArgument("verify_spread: target circle leaves the velocity grid");
    const Vec2 c = in.vbar + (g.velocity(k) - p);
    const std::size_t node[1] = {static_cast<std::size_t>(k)};
    hint.center = c;
    q.push_back(ops_->gain_at(ball_indicator(g, c, in.R), ball_indicator(g, c, in.r), node, &hint)[0]);
  }
  rep.measured_min = *std::min_element(q.begin(), q.end());
  rep.cst_Q = cst_Q;
  rep.bound_value = cst_Q * shape_factor(in);
  rep.grid_spec = {g.v_max(), g.h(), ops_->n_sigma(), nodes.size(), kRimPoints};
  rep.pass = rep.measured_min >= rep.bound_value;
  return rep;
}

double calibrate_cst(const SpreadOracle& oracle, std::span<const SpreadInputs> samples, int min_samples) {
  if (static_cast<int>(samples.size()) < min_samples)
    throw InvalidArgument("calibrate_cst: not enough sample configurations");
  double ratio = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    const auto rep = oracle.verify(s, 0.0);
    if (!(rep.measured_min > 0.0)) throw NumericalAbort("calibrate_cst: zero measured minimum (grid failure)");
    ratio = std::min(ratio, rep.measured_min / oracle.shape_factor(s));
  }
  return 0.95 * ratio;
}

std::vector<SpreadInputs> spread_samples(int count, std::uint64_t seed, double vbar_max) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<SpreadInputs> out;
  for (int i = 0; i < count; ++i) {
    SpreadInputs s;
    const double rad = vbar_max * std::sqrt(u01(rng));
    const double ang = 2.0 * kPi * u01(rng);
    s.vbar = {rad * std::cos(ang), rad * std::sin(ang)};
    s.R = 1.0 + 0.5 * u01(rng);
    s.r = s.R * (0.5 + 0.5 * u01(rng));
    s.xi = 0.1 + 0.4 * u01(rng);
    out.push_back(s);
  }
  return out;
}

std::vector<SpreadInputs> calibration_samples(int count, std::uint64_t seed) {
  std::vector<SpreadInputs> out;
  for (double R : {1.0, 1.5})
    for (double q : {0.5, 1.0})
      for (double xi : {0.1, 0.5}) out.push_back({{0.0, 0.0}, q * R, R, xi});
  const auto rest = spread_samples(std::max(0, count - static_cast<int>(out.size())), seed);
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

std::vector<double> iterated_gain(const CollisionOperators& ops, std::span<const double> phi, double R0) {
  const VelocityGrid& G = ops.grid();
  if (phi.size() != G.size()) throw InvalidArgument("iterated_gain: size mismatch");
  std::vector<double> g(phi.begin(), phi.end());
  const double r2 = R0 * R0 * (1.0 + 1e-12);
  for (std::size_t k = 0; k < G.size(); ++k)
    if (norm2(G.velocity(k)) > r2) g[k] = 0.0;
  const auto q = ops.gain(g, g);
  return ops.gain(q, g);
}

double ball_min(const VelocityGrid& grid, std::span<const double> field, Vec2 vbar, double r0) {
  const double r2 = r0 * r0 * (1.0 + 1e-12);
  double m = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (norm2(grid.velocity(k) - vbar) > r2) continue;
    m = std::min(m, field[k]);
    any = true;
  }
  return any ? m : 0.0;
}

SeedBox iterated_seed(const CollisionOperators& ops, std::span<const double> phi) {
  const VelocityGrid& G = ops.grid();
  if (phi.size() != G.size()) throw InvalidArgument("iterated_seed: size mismatch");
  double mass = 0.0;
  for (std::size_t k = 0; k < G.size(); ++k) {
    if (phi[k] < 0.0) throw InvalidArgument("iterated_seed: phi must be nonnegative");
    mass += G.weight(k) * phi[k];
  }
  if (!(mass > 0.0)) throw InvalidArgument("iterated_seed: phi has zero mass");

  // smallest radius of the doubling schedule holding half the mass
  double R0 = 0.0;
  for (double R : {1.0, 2.0, 4.0, 8.0}) {
    if (R > G.v_max() + 1e-12) break;
    double inside = 0.0;
    for (std::size_t k = 0; k < G.size(); ++k)
      if (norm(G.velocity(k)) <= R) inside += G.weight(k) * phi[k];
    R0 = R;
    if (inside >= 0.5 * mass) break;
  }
  if (R0 == 0.0) throw InvalidArgument("iterated_seed: velocity grid smaller than the first radius");

  const auto field = iterated_gain(ops, phi, R0);

  // candidate centers on a coarse sublattice, visited by increasing |vbar|
  const int step = std::max(1, G.half_width() / 16);
  std::vector<std::size_t> centers;
  for (std::size_t k = 0; k < G.size(); ++k)
    if (G.lattice_i(k) % step == 0 && G.lattice_j(k) % step == 0 && norm(G.velocity(k)) < R0)
      centers.push_back(k);
  std::stable_sort(centers.begin(), centers.end(),
                   [&](std::size_t a, std::size_t b) { return norm2(G.velocity(a)) < norm2(G.velocity(b)); });

  SeedBox best;
  best.R0 = R0;
  double best_score = 0.0;
  for (double r0 = G.h(); r0 <= R0 * (1.0 + 1e-12); r0 *= 2.0) {
    for (std::size_t c : centers) {
      const double eta = ball_min(G, field, G.velocity(c), r0);
      const double score = eta * r0 * r0;
      if (score > best_score) {
        best_score = score;
        best.r0 = r0;
        best.eta0 = eta;
        best.vbar = G.velocity(c);
      }
    }
  }
  if (!(best.eta0 > 0.0)) throw NumericalAbort("iterated_seed: no positive level found");
  return best;
}

}  // namespace boltzwall
