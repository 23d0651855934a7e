#include <cmath>

#include "boltzwall/parallel.hpp"
#include "boltzwall/quadrature.hpp"
#include "boltzwall/transport.hpp"
#include "doctest.h"

using namespace boltzwall;

namespace {

CollisionKernel maxwell_molecules() { return {KineticPotential::power(0.0), AngularKernel::constant(1.0)}; }

SchemeParams small_scheme() {
  SchemeParams p;
  p.h_x = 0.2;
  p.v_max = 4.0;
  p.h_v = 0.5;
  p.dt = 0.05;
  p.n_sigma = 16;
  return p;
}

InitialData vacuum_patch() {
  InitialData in;
  in.kind = InitialData::Kind::VacuumPatch;
  in.x_radius = 0.4;
  return in;
}

double max_rel_dev(const DistributionField& a, const DistributionField& b) {
  double dev = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    dev = std::max(dev, std::abs(a.values()[i] - b.values()[i]));
    ref = std::max(ref, std::abs(b.values()[i]));
  }
  return dev / ref;
}

}  // namespace

TEST_CASE("wall normalization: closed form against quadrature") {
  for (double T : {0.5, 1.0, 2.0}) {
    BoundaryModel w(T);
    CHECK(w.normalization() == doctest::Approx(w.normalization_quadrature()).epsilon(1e-10));
  }
  CHECK(BoundaryModel(1.0).normalization() == doctest::Approx(std::sqrt(2.0 * kPi)).epsilon(1e-15));
  CHECK_THROWS_AS(BoundaryModel(0.0), InvalidArgument);
}

TEST_CASE("diffuse emission at rest with unit outflux") {
  BoundaryModel w(1.0);
  CHECK(w.emission(1.0, {0, 0}, {1, 0}) == doctest::Approx(1.0 / std::sqrt(2.0 * kPi)).epsilon(1e-14));
  CHECK_THROWS_AS(w.emission(1.0, {0.5, 0.0}, {1, 0}), InvalidArgument);
}

TEST_CASE("property: emitted flux equals the absorbed flux") {
  // int_{v.n<0} |v.n| f_wall(v) dv in polar coordinates, n = (cos a, sin a)
  for (double T : {0.7, 1.0, 1.6})
    for (double a : {0.0, 0.9, 2.5}) {
      BoundaryModel w(T);
      const Vec2 n{std::cos(a), std::sin(a)};
      const double outflux = 0.37;
      const double exact = quad::integrate(
          [&](double th) {
            const Vec2 e = rotate(n, th);
            return quad::integrate([&](double r) { return r * std::abs(dot(e * r, n)) * w.emission(outflux, e * r, n); },
                                   0.0, 40.0 * std::sqrt(T));
          },
          0.5 * kPi, 1.5 * kPi);
      CHECK(exact == doctest::Approx(outflux).epsilon(1e-8));
    }
}

TEST_CASE("wall outflux of the unit Maxwellian converges at second order in h_v") {
  const double exact = 1.0 / std::sqrt(2.0 * kPi);
  double prev = 0.0;
  for (double hv : {0.5, 0.25, 0.125}) {
    SchemeParams p = small_scheme();
    p.v_max = 6.0;
    p.h_v = hv;
    TransportSolver s(ConvexDomain::disk({0, 0}, 1.0), std::nullopt, p, BoundaryModel(1.0));
    const auto f = s.initial_field({});
    const Vec2 n{std::sqrt(0.5), std::sqrt(0.5)};
    const double e1 = std::abs(s.wall_outflux(f, {1, 0}, {1, 0}) - exact);
    const double e2 = std::abs(s.wall_outflux(f, n, n) - exact);
    CHECK(e1 <= 0.04 * hv * hv);
    CHECK(e2 <= 0.04 * hv * hv);
    if (prev > 0.0) CHECK(prev / e1 > 3.5);
    prev = e1;
  }
}

TEST_CASE("spatial grid flags and stencils") {
  const auto dom = ConvexDomain::ellipse({0.2, -0.1}, 1.0, 0.6);
  SpatialGrid g(dom, 0.1);
  // cell count approximates the area pi a b / h^2
  CHECK(static_cast<double>(g.size()) == doctest::Approx(kPi * 0.6 / 0.01).epsilon(0.05));
  for (std::size_t c = 0; c < g.size(); ++c) {
    const int i = g.lattice_i(c), j = g.lattice_j(c);
    const bool all = g.cell(i + 1, j) >= 0 && g.cell(i - 1, j) >= 0 && g.cell(i, j + 1) >= 0 && g.cell(i, j - 1) >= 0;
    CHECK((g.flag(c) == SpatialGrid::Flag::Interior) == all);
    CHECK(dom.contains(g.center(c)));
  }
  // interior stencils reproduce affine functions; every stencil is a partition of unity
  auto affine = [](Vec2 x) { return 0.3 + 1.7 * x.x - 0.4 * x.y; };
  for (Vec2 y : {Vec2{0.23, 0.01}, Vec2{-0.31, 0.17}, Vec2{0.71, -0.05}}) {
    const Stencil s = g.stencil(y);
    double sw = 0.0, val = 0.0;
    for (int q = 0; q < s.n; ++q) {
      sw += s.w[q];
      val += s.w[q] * affine(g.center(static_cast<std::size_t>(s.idx[q])));
    }
    CHECK(s.n == 4);
    CHECK(sw == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(val == doctest::Approx(affine(y)).epsilon(1e-12));
  }
  for (double s = 0.0; s < 2.0 * kPi; s += 0.37) {
    const Stencil st = g.stencil(dom.boundary_point(s));
    double sw = 0.0;
    for (int q = 0; q < st.n; ++q) sw += st.w[q];
    CHECK(st.n >= 1);
    CHECK(sw == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("free transport error per step is bounded by the bilinear interpolation error") {
  const double sigma = 0.15;
  InitialData in;
  in.kind = InitialData::Kind::GaussianBlob;
  in.x_radius = sigma;
  const double fmax = 1.0 / (2.0 * kPi);
  double per_step_prev = 0.0;
  // fixed fractional offsets: dt proportional to h_x
  for (double hx : {0.1, 0.05, 0.025}) {
    SchemeParams p;
    p.h_x = hx;
    p.v_max = 1.0;
    p.h_v = 0.5;
    p.dt = 0.6 * hx;
    TransportSolver s(ConvexDomain::disk({0, 0}, 1.0), std::nullopt, p, BoundaryModel(1.0));
    auto f = s.initial_field(in);
    const int n = static_cast<int>(std::lround(0.24 / p.dt));
    for (int i = 0; i < n; ++i) s.step(f);
    double err = 0.0;
    for (std::size_t c = 0; c < f.cells(); ++c)
      for (std::size_t k = 0; k < f.nodes(); ++k) {
        const Vec2 v = s.velocity()->velocity(k);
        err = std::max(err, std::abs(f(c, k) - in.eval(s.space()->center(c) - v * (n * p.dt), v)));
      }
    // |f - I f| <= (h^2 / 8)(|f_xx| + |f_yy|), |f_xx| <= sup f / sigma^2
    CHECK(err <= n * (hx * hx / 8.0) * 2.0 * fmax / (sigma * sigma));
    const double per_step = err / n;
    if (per_step_prev > 0.0) CHECK(per_step_prev / per_step > 3.0);
    per_step_prev = per_step;
  }
}

TEST_CASE("wall Maxwellian is preserved over 100 steps") {
  TransportSolver s(ConvexDomain::disk({0, 0}, 1.0), maxwell_molecules(), small_scheme(), BoundaryModel(1.0));
  auto f = s.initial_field({});
  const auto f0 = f;
  for (int n = 0; n < 100; ++n) s.step(f);
  CHECK(max_rel_dev(f, f0) <= 1e-10);
  CHECK(f.mass() == doctest::Approx(f0.mass()).epsilon(1e-12));
  CHECK(f.time == doctest::Approx(5.0));
}

TEST_CASE("wall Maxwellian is preserved in an ellipse and a superellipse at another temperature") {
  for (const auto& dom : {ConvexDomain::ellipse({0, 0}, 1.2, 0.7), ConvexDomain::superellipse({0.1, 0}, 1.0, 0.8, 4)}) {
    InitialData in;
    in.T = 1.4;
    in.rho = 0.6;
    TransportSolver s(dom, maxwell_molecules(), small_scheme(), BoundaryModel(1.4));
    auto f = s.initial_field(in);
    const auto f0 = f;
    for (int n = 0; n < 10; ++n) s.step(f);
    CHECK(max_rel_dev(f, f0) <= 1e-10);
  }
}

TEST_CASE("vacuum patch: mass, positivity and the emission scale") {
  const auto dom = ConvexDomain::disk({0, 0}, 1.0);
  SchemeParams p = small_scheme();
  TransportSolver s(dom, maxwell_molecules(), p, BoundaryModel(1.0));
  auto f = s.initial_field(vacuum_patch());
  const double m0 = f.mass();
  const auto st1 = s.step(f);
  CHECK(std::abs(st1.mass - m0) <= 1e-3 * m0);
  for (int n = 1; n < 40; ++n) {
    const auto st = s.step(f);
    CHECK(st.min_f >= 0.0);
    CHECK(st.clamped_mass == 0.0);
    CHECK(st.emission_scale == 1.0);
    CHECK(st.flux_imbalance <= 1e-12);
  }
  CHECK(std::abs(f.mass() - m0) <= 1e-2 * m0);

  p.conservative_wall = true;
  TransportSolver c(dom, maxwell_molecules(), p, BoundaryModel(1.0));
  auto g = c.initial_field(vacuum_patch());
  for (int n = 0; n < 20; ++n) {
    const auto st = c.step(g);
    CHECK(std::abs(st.emission_scale - 1.0) <= 0.02);
  }
  CHECK(g.mass() == doctest::Approx(m0).epsilon(1e-12));
}

TEST_CASE("the patch fills in towards the wall Maxwellian") {
  TransportSolver s(ConvexDomain::disk({0, 0}, 1.0), maxwell_molecules(), small_scheme(), BoundaryModel(1.0));
  auto f = s.initial_field(vacuum_patch());
  const std::size_t center = static_cast<std::size_t>(s.space()->cell(0, 0));
  auto density = [&](std::size_t c) {
    double r = 0.0;
    for (std::size_t k = 0; k < f.nodes(); ++k) r += s.velocity()->weight(k) * f(c, k);
    return r;
  };
  CHECK(density(center) == 0.0);
  double prev = 0.0;
  for (int block = 0; block < 4; ++block) {
    for (int n = 0; n < 5; ++n) s.step(f);
    CHECK(density(center) > prev);
    prev = density(center);
  }
}

TEST_CASE("steps are deterministic and independent of the thread count") {
  const auto dom = ConvexDomain::ellipse({0, 0}, 1.0, 0.8);
  TransportSolver s(dom, maxwell_molecules(), small_scheme(), BoundaryModel(1.0));
  auto a = s.initial_field(vacuum_patch());
  auto b = a;
  set_thread_count(1);
  for (int n = 0; n < 3; ++n) s.step(a);
  set_thread_count(3);
  TransportSolver s3(dom, maxwell_molecules(), small_scheme(), BoundaryModel(1.0));
  auto c = s3.initial_field(vacuum_patch());
  for (int n = 0; n < 3; ++n) s3.step(c);
  set_thread_count(1);
  for (int n = 0; n < 3; ++n) s.step(b);
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    CHECK(a.values()[i] == b.values()[i]);
    CHECK(a.values()[i] == c.values()[i]);
  }
}

TEST_CASE("non-cutoff kernel keeps mass and positivity") {
  SchemeParams p = small_scheme();
  p.eps = 0.3;
  const CollisionKernel k{KineticPotential::power(0.0), AngularKernel::singular(0.5, 1.0)};
  TransportSolver s(ConvexDomain::disk({0, 0}, 1.0), k, p, BoundaryModel(1.0));
  REQUIRE(s.operators()->noncutoff());
  auto f = s.initial_field(vacuum_patch());
  const double m0 = f.mass();
  for (int n = 0; n < 5; ++n) {
    const auto st = s.step(f);
    CHECK(st.min_f >= 0.0);
  }
  CHECK(std::abs(f.mass() - m0) <= 1e-2 * m0);
}

TEST_CASE("input errors and numerical abort") {
  const auto dom = ConvexDomain::disk({0, 0}, 1.0);
  SchemeParams p = small_scheme();
  p.dt = 0.3;  // dt v_max = 1.2 > 4 h_x = 0.8
  CHECK_THROWS_AS(TransportSolver(dom, std::nullopt, p, BoundaryModel(1.0)), InvalidArgument);
  p = small_scheme();
  p.cfl_factor = 5.0;
  CHECK_THROWS_AS(TransportSolver(dom, std::nullopt, p, BoundaryModel(1.0)), InvalidArgument);

  TransportSolver s(dom, maxwell_molecules(), small_scheme(), BoundaryModel(1.0));
  auto f = s.initial_field({});
  f(3, 5) = std::nan("");
  CHECK_THROWS_AS(s.step(f), NumericalAbort);
  CHECK_THROWS_AS(run(s, {}, 0.07, {}), InvalidArgument);
  CHECK_THROWS_AS(run(s, {}, 0.1, {0.2}), InvalidArgument);
}

TEST_CASE("run keeps the requested snapshots") {
  TransportSolver s(ConvexDomain::disk({0, 0}, 1.0), std::nullopt, small_scheme(), BoundaryModel(1.0));
  const auto r = run(s, vacuum_patch(), 0.5, {0.0, 0.25, 0.5});
  CHECK(r.series.size() == 11);
  REQUIRE(r.snapshots.size() == 3);
  CHECK(r.snapshots[0].time == 0.0);
  CHECK(r.snapshots[1].time == doctest::Approx(0.25));
  CHECK(r.snapshots[2].time == doctest::Approx(0.5));
  CHECK(r.series.back().t == doctest::Approx(0.5));
}
