#include <cmath>
#include <random>

#include "boltzwall/operators.hpp"
#include "boltzwall/quadrature.hpp"
#include "doctest.h"

using namespace boltzwall;

namespace {

CollisionKernel maxwell_molecules() {
  return {KineticPotential::power(0.0), AngularKernel::constant(1.0)};
}

std::vector<double> random_bumps(const VelocityGrid& g, std::mt19937_64& rng, double spread = 1.5) {
  std::uniform_real_distribution<double> u(-spread, spread);
  std::uniform_real_distribution<double> a(0.2, 1.0);
  std::vector<double> f(g.size(), 0.0);
  for (int j = 0; j < 3; ++j) {
    const Vec2 c{u(rng), u(rng)};
    const double amp = a(rng), T = a(rng);
    for (std::size_t k = 0; k < g.size(); ++k) f[k] += maxwellian(g.velocity(k), amp, T, c);
  }
  return f;
}

double weighted_sum(const VelocityGrid& g, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) s += g.weight(k) * f[k];
  return s;
}

}  // namespace

TEST_CASE("post-collision velocities") {
  auto pc = post_collision({1, 0}, {-1, 0}, {0, 1});
  CHECK(pc.v_prime.x == doctest::Approx(0.0));
  CHECK(pc.v_prime.y == doctest::Approx(1.0));
  CHECK(pc.v_star_prime.y == doctest::Approx(-1.0));
  CHECK(pc.cos_theta == doctest::Approx(0.0));
  pc = post_collision({1, 0}, {-1, 0}, {1, 0});
  CHECK(pc.v_prime == Vec2{1, 0});
  CHECK(pc.v_star_prime == Vec2{-1, 0});
  CHECK(pc.cos_theta == 1.0);
  CHECK(post_collision({2, 3}, {2, 3}, {0, 1}).cos_theta == 1.0);
}

TEST_CASE("property: collisions conserve momentum and energy") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-5, 5), a(0, 2 * kPi);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 v{u(rng), u(rng)}, w{u(rng), u(rng)};
    const Vec2 s = rotate({1, 0}, a(rng));
    const auto pc = post_collision(v, w, s);
    CHECK(std::abs(norm2(pc.v_prime) + norm2(pc.v_star_prime) - norm2(v) - norm2(w)) < 1e-12 * 100);
    CHECK(norm(pc.v_prime + pc.v_star_prime - v - w) < 1e-12);
  }
}

TEST_CASE("velocity grid invariants") {
  for (double h : {0.5, 0.25}) {
    VelocityGrid g(8.0, h);
    CHECK(std::abs(g.total_weight() - kPi * 64.0) <= 0.02 * kPi * 64.0);
    for (std::size_t k = 0; k < g.size(); ++k) {
      CHECK(g.weight(k) > 0.0);
      REQUIRE(g.mirror(k) >= 0);
      CHECK(g.velocity(g.mirror(k)) == -g.velocity(k));
    }
  }
  CHECK_THROWS_AS(SphereQuadrature(7), InvalidArgument);
  SphereQuadrature sq(16);
  double s = 0.0;
  for (double w : sq.weight) s += w;
  CHECK(s == doctest::Approx(2 * kPi));
}

TEST_CASE("bilinear interpolation reproduces affine functions inside the ball") {
  auto g = std::make_shared<VelocityGrid>(4.0, 0.5);
  auto f = VelocityFunction::sample(g, [](Vec2 v) { return 2.0 + v.x - 0.5 * v.y; });
  CHECK(f.at({0.3, -1.1}) == doctest::Approx(2.0 + 0.3 + 0.55));
  CHECK(f.at({20.0, 0.0}) == 0.0);
}

TEST_CASE("loss weight for Maxwell molecules is n_b times the mass") {
  auto g = std::make_shared<VelocityGrid>(6.0, 0.5);
  CollisionOperators ops(g, maxwell_molecules(), 16);
  std::mt19937_64 rng(3);
  auto f = random_bumps(*g, rng);
  const double rho = weighted_sum(*g, f);
  for (auto& x : f) x /= rho;
  const auto L = ops.loss(f);
  for (double l : L) CHECK(l == doctest::Approx(2 * kPi).epsilon(1e-12));
  std::vector<double> zero(g->size(), 0.0);
  for (double l : ops.loss(zero)) CHECK(l == 0.0);
}

TEST_CASE("loss weight for hard spheres against a narrow mass") {
  auto g = std::make_shared<VelocityGrid>(2.0, 0.025);
  CollisionOperators ops(g, {KineticPotential::power(1.0), AngularKernel::constant(1.0)}, 16);
  const double s = 0.05;
  auto f = g->sample([&](Vec2 v) { return maxwellian(v, 1.0, s * s); });
  const double rho = weighted_sum(*g, f);
  for (auto& x : f) x /= rho;
  for (Vec2 v : {Vec2{1.5, 0.0}, Vec2{0.0, -1.0}, Vec2{0.75, 0.75}}) {
    const int k = g->node(static_cast<int>(std::lround(v.x / 0.025)), static_cast<int>(std::lround(v.y / 0.025)));
    REQUIRE(k >= 0);
    // E|v - X| for X ~ N(0, s^2 I) is |v| + s^2/(2|v|) + O(s^4)
    const double r = norm(v);
    CHECK(ops.loss_at(f, k) == doctest::Approx(2 * kPi * (r + s * s / (2 * r))).epsilon(1e-4));
  }
}

TEST_CASE("gain of the Maxwellian at the origin") {
  auto g = std::make_shared<VelocityGrid>(8.0, 0.25);
  CollisionOperators ops(g, maxwell_molecules(), 16);
  const auto M = g->sample([](Vec2 v) { return maxwellian(v); });
  const std::size_t k0 = g->node(0, 0);
  CHECK(std::abs(ops.gain_at(M, M, k0) - 2 * kPi * M[k0]) <= ops.quadrature_tolerance());
  std::vector<double> zero(g->size(), 0.0);
  CHECK(ops.gain_at(zero, zero, k0) == 0.0);
}

TEST_CASE("gain of a ball indicator against Monte Carlo") {
  // Q+(1_B, 1_B)(0) for the unit ball; v' and v'_* of v = 0 as functions of (v_*, sigma)
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.5, 1.5), a(0, 2 * kPi);
  const int n = 1000000;
  long hits = 0;
  for (int i = 0; i < n; ++i) {
    const Vec2 w{u(rng), u(rng)};
    const auto pc = post_collision({0, 0}, w, rotate({1, 0}, a(rng)));
    if (norm2(pc.v_prime) <= 1.0 && norm2(pc.v_star_prime) <= 1.0) ++hits;
  }
  const double mc = 9.0 * 2 * kPi * static_cast<double>(hits) / n;

  auto g = std::make_shared<VelocityGrid>(1.6, 0.01);
  CollisionOperators ops(g, maxwell_molecules(), 64);
  const auto ind = g->sample([](Vec2 v) { return norm2(v) <= 1.0 ? 1.0 : 0.0; });
  const double q = ops.gain_at(ind, ind, g->node(0, 0));
  CHECK(q > 0.0);
  CHECK(q == doctest::Approx(mc).epsilon(0.01));
}

TEST_CASE("property: discrete gain equals discrete loss mass") {
  auto g = std::make_shared<VelocityGrid>(6.0, 0.5);
  CollisionOperators ops(g, maxwell_molecules(), 16);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    const auto f = random_bumps(*g, rng);
    const auto Q = ops.gain(f, f);
    const auto L = ops.loss(f);
    double mq = 0.0, ml = 0.0;
    for (std::size_t k = 0; k < g->size(); ++k) {
      mq += g->weight(k) * Q[k];
      ml += g->weight(k) * L[k] * f[k];
    }
    CHECK(std::abs(mq - ml) <= 0.01 * ml);
  }
}

TEST_CASE("property: gain is nonnegative and symmetric evaluation matches the full rule") {
  auto g = std::make_shared<VelocityGrid>(6.0, 0.5);
  CollisionOperators ops(g, {KineticPotential::power(0.5), AngularKernel::constant(0.7)}, 16);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 4; ++t) {
    std::vector<double> a(g->size()), b(g->size());
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    for (double q : ops.gain(a, b)) CHECK(q >= 0.0);
    const auto folded = ops.gain(a, a);
    for (std::size_t k = 0; k < g->size(); k += 37)
      CHECK(folded[k] == doctest::Approx(ops.gain_at(a, a, k)).epsilon(1e-12));
  }
}

TEST_CASE("property: translation equivariance on lattice shifts") {
  auto g = std::make_shared<VelocityGrid>(6.0, 0.5);
  CollisionOperators ops(g, maxwell_molecules(), 16);
  auto bump = [](Vec2 c) {
    return [c](Vec2 v) {
      const double r2 = norm2(v - c);
      return r2 < 1.0 ? (1 - r2) * (1 - r2) : 0.0;
    };
  };
  const auto f0 = g->sample(bump({0, 0}));
  const auto f1 = g->sample(bump({1.0, -0.5}));
  const auto q0 = ops.gain(f0, f0);
  const auto q1 = ops.gain(f1, f1);
  for (std::size_t k = 0; k < g->size(); ++k) {
    const int m = g->node(g->lattice_i(k) + 2, g->lattice_j(k) - 1);
    if (m < 0 || norm(g->velocity(k)) > 3.0) continue;
    CHECK(q1[m] == doctest::Approx(q0[k]).epsilon(1e-12));
  }
}

TEST_CASE("cutoff rules integrate the kernel") {
  const auto co = AngularKernel::singular(0.5, 1.0).truncated(0.05, AngularKernel::Side::CO);
  CHECK(cutoff_rule(co, 16).total() == doctest::Approx(compute_n_b(co)).epsilon(1e-8));
  const auto s = AngularKernel::singular(-0.5, 1.0);
  CHECK(cutoff_rule(s, 16).total() == doctest::Approx(compute_n_b(s)).epsilon(1e-8));
  CHECK(cutoff_rule(AngularKernel::constant(2.0), 8).total() == doctest::Approx(4 * kPi));
  CHECK_THROWS_AS(cutoff_rule(AngularKernel::singular(0.5, 1.0), 16), InvalidArgument);
}

TEST_CASE("S for Maxwell molecules against the cancellation identity") {
  // For Phi = 1 the change of variables v_* -> v'_* gives
  // S[g](v) = -rho_g * 2 int_0^eps b(theta) tan^2(theta/2) dtheta, independent of v.
  const double eps = 0.3;
  const auto b = AngularKernel::singular(0.5, 1.0);
  const double K = 2.0 * quad::integrate_left_singular(
                             [&](double t) {
                               const double tt = std::tan(0.5 * t);
                               return b.eval(t) * tt * tt;
                             },
                             eps);
  auto g = std::make_shared<VelocityGrid>(6.0, 0.25);
  CollisionOperators ops(g, {KineticPotential::power(0.0), b}, 16, eps);
  const auto f = g->sample([](Vec2 v) { return maxwellian(v, 1.0, 0.5); });
  const double rho = weighted_sum(*g, f);
  const auto S = ops.s_weight(f);
  for (std::size_t k = 0; k < g->size(); ++k) {
    if (norm(g->velocity(k)) > 1.0) continue;
    CHECK(S[k] == doctest::Approx(-rho * K).epsilon(0.03));
  }
  std::vector<double> zero(g->size(), 0.0);
  for (double x : ops.s_weight(zero)) CHECK(x == 0.0);
}

TEST_CASE("Q1 vanishes when h is constant") {
  auto g = std::make_shared<VelocityGrid>(6.0, 0.5);
  CollisionOperators ops(g, {KineticPotential::power(0.0), AngularKernel::singular(1.0, 1.0)}, 16, 0.2);
  std::mt19937_64 rng(8);
  const auto f = random_bumps(*g, rng, 0.5);
  const auto h = g->sample([](Vec2 v) { return norm(v) <= 5.9 ? 3.0 : 0.0; });
  const auto Q = ops.q1(f, h);
  for (std::size_t k = 0; k < g->size(); ++k) {
    if (norm(g->velocity(k)) > 2.0) continue;
    CHECK(std::abs(Q[k]) <= 1e-10);
  }
}

TEST_CASE("Q1 decreases in proportion to m_b of the NCO part") {
  auto g = std::make_shared<VelocityGrid>(6.0, 0.25);
  std::mt19937_64 rng(9);
  const auto f = random_bumps(*g, rng, 0.5);
  std::vector<double> lm, lq;
  for (double eps : {0.2, 0.1, 0.05}) {
    CollisionOperators ops(g, {KineticPotential::power(0.0), AngularKernel::singular(0.5, 1.0)}, 16, eps);
    double sup = 0.0;
    for (double q : ops.q1(f, f)) sup = std::max(sup, std::abs(q));
    lm.push_back(std::log(ops.m_b()));
    lq.push_back(std::log(sup));
  }
  CHECK(quad::fit_slope(lm, lq) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("bound constants") {
  Observables o;
  o.energy = 1.0;
  CalibratedConstants unit;
  const auto phi = KineticPotential::power(0.0);
  auto bc = bound_constants(o, phi, 2 * kPi, 2 * kPi, unit);
  CHECK(bc.C_L == doctest::Approx(2 * kPi));
  o.energy = 0.0;
  CHECK(bound_constants(o, phi, 2 * kPi, 2 * kPi, unit).C_L == 0.0);
  o.p = 1.5;
  CHECK_THROWS_AS(bound_constants(o, KineticPotential::power(-1.0), 1, 1, unit), InvalidArgument);
  o.p = 2.5;
  CHECK_NOTHROW(bound_constants(o, KineticPotential::power(-1.0), 1, 1, unit));
}

TEST_CASE("property: calibrated L and S bounds hold on fresh random inputs") {
  auto g = std::make_shared<VelocityGrid>(6.0, 0.5);
  for (double gamma : {0.0, 0.5}) {
    CollisionOperators ops(g, {KineticPotential::power(gamma), AngularKernel::singular(0.5, 1.0)}, 16, 0.2);
    const auto cst = calibrate_bound_constants(ops, 128, 1234);
    CHECK(cst.empirically_calibrated);
    CHECK(cst.cst_L > 0.0);
    CHECK(cst.cst_S > 0.0);
    CHECK(cst.cst_Q1 > 0.0);
    int checked = 0;
    for (const auto& f : calibration_family(*g, 10, 777)) {
      const auto o = observables(*g, f, 2.0, gamma);
      const auto bc = bound_constants(o, ops.kernel().phi, ops.n_b(), ops.m_b(), cst);
      const auto L = ops.loss(f);
      const auto S = ops.s_weight(f);
      const auto Q = ops.q1(f, f);
      const double gt = 2.0 + gamma;
      for (std::size_t k = 0; k < g->size(); ++k) {
        const double v = norm(g->velocity(k));
        if (v > 3.0) continue;
        const double w = std::pow(bracket(v), gamma);
        CHECK(std::abs(L[k]) <= bc.C_L * w);
        CHECK(std::abs(S[k]) <= bc.C_S * w);
        CHECK(std::abs(Q[k]) <=
              cst.cst_Q1 * ops.m_b() * o.l1_weighted * o.w2inf * std::pow(bracket(v), gt));
        ++checked;
      }
    }
    CHECK(checked >= 1000);
  }
}

TEST_CASE("observables") {
  auto g = std::make_shared<VelocityGrid>(8.0, 0.25);
  const auto M = g->sample([](Vec2 v) { return maxwellian(v); });
  const auto o = observables(*g, M, 2.0, 0.0);
  CHECK(o.rho == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(o.energy == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(o.weighted_energy == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(o.entropy == doctest::Approx(-std::log(2 * kPi) - 1.0).epsilon(1e-3));
  // L^2 norm of M: int M^2 = 1/(4 pi)
  CHECK(o.lp == doctest::Approx(std::sqrt(1.0 / (4 * kPi))).epsilon(1e-3));
  // sup |D^2 M| = M(0)
  CHECK(o.w2inf == doctest::Approx(1.0 / (2 * kPi)).epsilon(1e-2));

  const auto z = observables(*g, std::vector<double>(g->size(), 0.0), 2.0, 0.0);
  CHECK(z.rho == 0.0);
  CHECK(z.energy == 0.0);
  CHECK(z.entropy == 0.0);
  CHECK(z.w2inf == 0.0);

  auto fine = std::make_shared<VelocityGrid>(1.2, 0.01);
  const auto ind = fine->sample([](Vec2 v) { return norm2(v) <= 1.0 ? 1.0 : 0.0; });
  const auto oi = observables(*fine, ind, 2.0, 0.0);
  CHECK(oi.rho == doctest::Approx(kPi).epsilon(1e-2));
  CHECK(oi.energy == doctest::Approx(kPi / 2).epsilon(1e-2));
}

TEST_CASE("equilibrium factor makes the wall Maxwellian stationary") {
  auto g = std::make_shared<VelocityGrid>(6.0, 0.5);
  CollisionOperators ops(g, maxwell_molecules(), 16);
  const auto kappa = ops.equilibrium_factor(1.0);
  const auto M = g->sample([](Vec2 v) { return maxwellian(v, 2.5); });
  const auto Q = ops.gain(M, M);
  const auto L = ops.loss(M);
  for (std::size_t k = 0; k < g->size(); ++k) {
    CHECK(kappa[k] > 0.0);
    CHECK(kappa[k] * Q[k] == doctest::Approx(L[k] * M[k]).epsilon(1e-10));
  }
}
