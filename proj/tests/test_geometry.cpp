#include <cmath>
#include <random>

#include "boltzwall/geometry.hpp"
#include "doctest.h"

using namespace boltzwall;

namespace {

Vec2 random_interior(const ConvexDomain& dom, std::mt19937_64& rng, double shrink = 0.98) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto bb = dom.bounding_box();
  for (;;) {
    const Vec2 c = dom.center();
    const Vec2 x{c.x + u(rng) * 0.5 * (bb.hi.x - bb.lo.x) * shrink,
                 c.y + u(rng) * 0.5 * (bb.hi.y - bb.lo.y) * shrink};
    if (dom.level(x) < -1e-3) return x;
  }
}

std::vector<ConvexDomain> shapes() {
  return {ConvexDomain::disk({0, 0}, 1.0), ConvexDomain::ellipse({0.3, -0.2}, 2.0, 1.0),
          ConvexDomain::superellipse({0, 0}, 1.0, 1.0, 4)};
}

}  // namespace

TEST_CASE("contains") {
  const auto disk = ConvexDomain::disk({0, 0}, 1.0);
  CHECK(disk.contains({0, 0}));
  CHECK_FALSE(disk.contains({2, 0}));
  const auto ell = ConvexDomain::ellipse({0, 0}, 2.0, 1.0);
  // x^2/4 + y^2 - 1 at (1.5, 0.5)
  CHECK(ell.level({1.5, 0.5}) == doctest::Approx(1.5 * 1.5 / 4 + 0.25 - 1.0));
  CHECK(ell.contains({1.5, 0.5}));
}

TEST_CASE("normal_at") {
  const auto disk = ConvexDomain::disk({0, 0}, 1.0);
  const Vec2 n1 = disk.normal_at({1, 0});
  CHECK(n1.x == doctest::Approx(1.0));
  CHECK(n1.y == doctest::Approx(0.0));
  const Vec2 n2 = disk.normal_at({0, -1});
  CHECK(n2.y == doctest::Approx(-1.0));
  const auto ell = ConvexDomain::ellipse({0, 0}, 2.0, 1.0);
  const Vec2 n3 = ell.normal_at({2, 0});
  CHECK(n3.x == doctest::Approx(1.0));
  CHECK(std::abs(n3.y) < 1e-15);
  CHECK_THROWS_AS(disk.normal_at({0.5, 0}), InvalidArgument);
  for (double s = 0.0; s < 6.28; s += 0.1) {
    const auto se = ConvexDomain::superellipse({0, 0}, 1.0, 1.0, 4);
    CHECK(std::abs(norm(se.normal_at(se.boundary_point(s))) - 1.0) < 1e-12);
  }
}

TEST_CASE("backward contact") {
  const auto disk = ConvexDomain::disk({0, 0}, 1.0);
  auto c = disk.backward_contact({0, 0}, {1, 0});
  CHECK(c.t_contact == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.x_contact.x == doctest::Approx(-1.0).epsilon(1e-12));
  c = disk.backward_contact({0.5, 0}, {1, 0});
  CHECK(c.t_contact == doctest::Approx(1.5).epsilon(1e-12));
  const auto ell = ConvexDomain::ellipse({0, 0}, 2.0, 1.0);
  c = ell.backward_contact({0, 0}, {1, 1});
  // t^2/4 + t^2 = 1
  CHECK(c.t_contact == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-12));
  CHECK_THROWS_AS(disk.backward_contact({0, 0}, {0, 0}), InvalidArgument);
}

TEST_CASE("forward contact and horizon") {
  const auto disk = ConvexDomain::disk({0, 0}, 1.0);
  auto c = disk.forward_contact({0, 0}, {1, 0});
  CHECK(c.x_contact.x == doctest::Approx(1.0).epsilon(1e-12));
  c = disk.forward_contact({0, 0}, {0, 2});
  CHECK(c.t_contact == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.x_contact.y == doctest::Approx(1.0).epsilon(1e-12));
  const auto se = ConvexDomain::superellipse({0, 0}, 1.0, 1.0, 4);
  const double s = 1.0 / std::sqrt(2.0);
  c = se.forward_contact({0, 0}, {s, s});
  // 2 (t/sqrt2)^4 = 1
  CHECK(c.t_contact == doctest::Approx(std::pow(2.0, 0.25)).epsilon(1e-12));
  c = disk.forward_contact({0, 0}, {1, 0}, 0.5);
  CHECK_FALSE(c.hit);
  c = disk.forward_contact({1, 0}, {1, 0});
  CHECK(c.hit);
  CHECK(c.t_contact == 0.0);
}

TEST_CASE("grazing flag") {
  const auto disk = ConvexDomain::disk({0, 0}, 1.0);
  auto c = disk.forward_contact({0, 0}, {1, 0});
  CHECK_FALSE(c.grazing);
  c = disk.forward_contact({0, 1}, {1, 0});
  CHECK(c.grazing);
}

TEST_CASE("forward normal map") {
  const auto disk = ConvexDomain::disk({0, 0}, 1.0);
  Vec2 n = disk.forward_normal_map({0, 0}, {1, 0});
  CHECK(n.x == doctest::Approx(1.0));
  n = disk.forward_normal_map({0.5, 0}, {-1, 0});
  CHECK(n.x == doctest::Approx(-1.0));
  n = disk.forward_normal_map({0, 0.5}, {3, 0});
  CHECK(n.x == doctest::Approx(std::sqrt(0.75)).epsilon(1e-11));
  CHECK(n.y == doctest::Approx(0.5).epsilon(1e-11));
}

TEST_CASE("geometric constants") {
  const auto disk = ConvexDomain::disk({0, 0}, 1.0);
  auto gc = disk.geometric_constants({0, 0});
  CHECK(gc.lambda_raw == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(gc.bconst_raw == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(gc.lambda == doctest::Approx(0.99 * 0.5));

  gc = disk.geometric_constants({0.5, 0});
  // n.(x - x1) = 1 - 0.5 cos(phi), minimal at phi = 0
  CHECK(gc.bconst_raw == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(gc.argmin_point.x == doctest::Approx(1.0).epsilon(1e-6));
  // n.(x-x1)/|x-x1| = (1 - 0.5c)/sqrt(1.25 - c): independent 1-D scan
  double lmin = 1e9;
  for (int i = 0; i <= 200000; ++i) {
    const double c = std::cos(kPi * i / 200000.0);
    lmin = std::min(lmin, (1 - 0.5 * c) / std::sqrt(1.25 - c));
  }
  CHECK(gc.lambda_raw == doctest::Approx(0.5 * lmin).epsilon(1e-8));

  const auto ell = ConvexDomain::ellipse({0, 0}, 2.0, 1.0);
  gc = ell.geometric_constants({0, 0});
  // support function x.n on x^2/4 + y^2 = 1 with x = (2cos s, sin s)
  double bmin = 1e9;
  for (int i = 0; i <= 200000; ++i) {
    const double s = 2.0 * kPi * i / 200000.0;
    const double x = 2 * std::cos(s), y = std::sin(s);
    const double gx = x / 2.0, gy = 2.0 * y;
    bmin = std::min(bmin, (x * gx + y * gy) / std::hypot(gx, gy));
  }
  CHECK(gc.bconst_raw == doctest::Approx(0.5 * bmin).epsilon(1e-9));
  CHECK(gc.bconst_raw == doctest::Approx(0.5).epsilon(1e-9));  // minimum on the minor axis is b
  CHECK_THROWS_AS(disk.geometric_constants({1, 0}), InvalidArgument);
  CHECK_THROWS_AS(disk.geometric_constants({2, 0}), InvalidArgument);
}

TEST_CASE("diameter and distance") {
  CHECK(ConvexDomain::disk({1, 1}, 0.5).diameter() == doctest::Approx(1.0));
  CHECK(ConvexDomain::ellipse({0, 0}, 2.0, 1.0).diameter() == doctest::Approx(4.0));
  // superellipse p=4 is farthest along the diagonal: |(2^{-1/4}, 2^{-1/4})| = 2^{1/4}
  CHECK(ConvexDomain::superellipse({0, 0}, 1, 1, 4).diameter() ==
        doctest::Approx(2.0 * std::pow(2.0, 0.25)).epsilon(1e-10));
  CHECK(ConvexDomain::disk({0, 0}, 1.0).distance_to_boundary({0.25, 0}) == doctest::Approx(0.75));
  CHECK(ConvexDomain::ellipse({0, 0}, 2.0, 1.0).distance_to_boundary({0, 0}) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("property: backward contact root is unique") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
  for (const auto& dom : shapes()) {
    for (int k = 0; k < 50; ++k) {
      const Vec2 x = random_interior(dom, rng);
      const Vec2 v = rotate({1.0, 0.0}, ang(rng));
      const double tmax = 2.0 * dom.bounding_box().diagonal();
      int changes = 0;
      double prev = dom.level(x);
      for (int i = 1; i <= 20000; ++i) {
        const double g = dom.level(x - v * (tmax * i / 20000.0));
        if ((g >= 0) != (prev >= 0)) ++changes;
        prev = g;
      }
      CHECK(changes == 1);
      const auto c = dom.backward_contact(x, v);
      CHECK(std::abs(dom.level(c.x_contact)) < 1e-10);
    }
  }
}

TEST_CASE("property: backward(x, v) equals forward(x, -v)") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> sp(0.1, 5.0);
  for (const auto& dom : shapes()) {
    for (int k = 0; k < 1000 / 3 + 1; ++k) {
      const Vec2 x = random_interior(dom, rng);
      const Vec2 v = rotate({sp(rng), 0.0}, ang(rng));
      CHECK(std::abs(dom.backward_contact(x, v).t_contact - dom.forward_contact(x, -v).t_contact) <=
            1e-10);
    }
  }
}

TEST_CASE("property: convexity of sampled segments") {
  std::mt19937_64 rng(13);
  for (const auto& dom : shapes()) {
    for (int k = 0; k < 100; ++k) {
      const Vec2 x = random_interior(dom, rng);
      const Vec2 y = random_interior(dom, rng);
      bool inside = true;
      for (int i = 0; i <= 100; ++i) inside = inside && dom.contains(x + (y - x) * (i / 100.0));
      CHECK(inside);
    }
  }
}

TEST_CASE("property: geometric constants are positive") {
  std::mt19937_64 rng(14);
  for (const auto& dom : shapes()) {
    for (int k = 0; k < 10; ++k) {
      const auto gc = dom.geometric_constants(random_interior(dom, rng, 0.9));
      CHECK(gc.lambda > 0.0);
      CHECK(gc.bconst > 0.0);
    }
  }
}

TEST_CASE("invalid shapes") {
  CHECK_THROWS_AS(ConvexDomain::disk({0, 0}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(ConvexDomain::ellipse({0, 0}, 1.0, 2.0), InvalidArgument);
  CHECK_THROWS_AS(ConvexDomain::superellipse({0, 0}, 1.0, 1.0, 3), InvalidArgument);
}

TEST_CASE("boundary parameter inverts the boundary parametrization") {
  for (const auto& dom : {ConvexDomain::disk({0.2, -0.1}, 1.3), ConvexDomain::ellipse({0, 0}, 2.0, 1.0),
                          ConvexDomain::superellipse({0, 0}, 1.0, 0.7, 4)}) {
    for (int k = 0; k < 64; ++k) {
      const double s = 2.0 * kPi * k / 64.0 + 0.01;
      CHECK(dom.boundary_parameter(dom.boundary_point(s)) == doctest::Approx(s).epsilon(1e-10));
    }
  }
}
