#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "enclab/errors.hpp"
#include "enclab/geometry.hpp"
#include "oracles.hpp"

using namespace enclab;

namespace {

std::vector<Shape> test_shapes() {
  return {Shape::disk({0.2, -0.1}, 0.3), Shape::ellipse({0.1, 0.2}, 0.5, 0.2, 0.4),
          Shape::rectangle({-1, -1}, {1, 1}), Shape::polygon({{0, 0}, {1, 0.1}, {0.6, 0.8}, {-0.2, 0.5}}),
          Shape::cone_fixture()};
}

// Chord length by sampling the line densely; independent of the analytic clipping.
double sampled_chord(const Shape& s, const Direction& d, double c, int n) {
  const double half = 4.0;
  int inside = 0;
  for (int i = 0; i < n; ++i) {
    const double t = -half + 2.0 * half * (i + 0.5) / n;
    if (s.contains(d.omega() * c + d.theta() * t)) ++inside;
  }
  return 2.0 * half * inside / n;
}

}  // namespace

TEST_CASE("direction frame is orthonormal") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 100; ++i) {
    const Direction d(Vec2{u(rng), u(rng)});
    CHECK(std::abs(norm(d.omega()) - 1.0) < 1e-12);
    CHECK(std::abs(norm(d.theta()) - 1.0) < 1e-12);
    CHECK(std::abs(dot(d.omega(), d.theta())) < 1e-12);
    CHECK(cross(d.omega(), d.theta()) > 0.0);
  }
  CHECK_THROWS_AS(Direction(Vec2{0, 0}), InvalidShape);
}

TEST_CASE("shape factories validate") {
  CHECK_THROWS_AS(Shape::disk({0, 0}, 0.0), InvalidShape);
  CHECK_THROWS_AS(Shape::ellipse({0, 0}, 1.0, -1.0, 0.0), InvalidShape);
  CHECK_THROWS_AS(Shape::polygon({{0, 0}, {0, 1}, {1, 0}}), InvalidShape);  // clockwise
  CHECK_THROWS_AS(Shape::polygon({{0, 0}, {1, 0}, {2, 0}, {1, 1}}), InvalidShape);  // collinear
  CHECK_THROWS_AS(Shape::cone_sector_cap({0, 0}, 1.0, 0.5, 1.0), InvalidShape);
}

TEST_CASE("cone fixture matches the defining inequalities") {
  const Shape cone = Shape::cone_fixture();
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int i = 0; i < 20000; ++i) {
    const Vec2 p{u(rng), u(rng)};
    const bool expected = p.x < p.y && p.y < 2 * p.x && 0 < p.x && dot(p, p) < 1.0;
    CHECK(cone.contains(p) == expected);
  }
}

TEST_CASE("support function examples") {
  CHECK(support_function(Shape::disk({0, 0}, 1), Direction::from_angle(0.7)) == doctest::Approx(1.0));
  CHECK(support_function(Shape::disk({0.3, 0}, 0.5), Direction(Vec2{1, 0})) == doctest::Approx(0.8));
  CHECK(support_function(Shape::rectangle({-1, -1}, {1, 1}), Direction(Vec2{1, 1})) ==
        doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("support function agrees with dense boundary sampling") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ang(0, 2 * kPi);
  for (const Shape& s : test_shapes()) {
    const auto poly = s.boundary_polyline(20000);
    for (int i = 0; i < 32; ++i) {
      const Direction d = Direction::from_angle(ang(rng));
      double h = -1e300;
      for (const Vec2& p : poly) h = std::max(h, dot(p, d.omega()));
      CHECK(support_function(s, d) == doctest::Approx(h).epsilon(1e-7));
    }
  }
}

TEST_CASE("support function is translation covariant") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ang(0, 2 * kPi), off(-2, 2);
  for (const Shape& s : test_shapes()) {
    for (int i = 0; i < 32; ++i) {
      const Direction d = Direction::from_angle(ang(rng));
      const Vec2 c{off(rng), off(rng)};
      CHECK(support_function(s.translated(c), d) ==
            doctest::Approx(support_function(s, d) + dot(c, d.omega())).epsilon(1e-12));
    }
  }
}

TEST_CASE("slice measure examples") {
  const Shape unit = Shape::disk({0, 0}, 1);
  CHECK(slice_measure(unit, Direction::from_angle(1.1), 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(slice_measure(unit, Direction::from_angle(1.1), 1.0) == doctest::Approx(2.0));
  CHECK(slice_measure(Shape::cone_fixture(), Direction(Vec2{0, -1}), 0.1) == doctest::Approx(0.05));
  CHECK_THROWS_AS(slice_measure(unit, Direction::from_angle(0), -0.1), InvalidArgument);
  CHECK(slice_measure(unit, Direction::from_angle(0), 2.5) == 0.0);
}

TEST_CASE("slice measure agrees with line sampling") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> ang(0, 2 * kPi), frac(0, 1);
  const int n = 400000;
  const double spacing = 8.0 / n;
  for (const Shape& s : test_shapes()) {
    for (int i = 0; i < 16; ++i) {
      const Direction d = Direction::from_angle(ang(rng));
      const double depth = frac(rng) * width(s, d);
      const double analytic = slice_measure(s, d, depth);
      const double sampled = sampled_chord(s, d, support_function(s, d) - depth, n);
      CHECK(std::abs(analytic - sampled) <= 2.0 * spacing);
    }
  }
}

TEST_CASE("slices integrate to the area") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> ang(0, 2 * kPi);
  for (const Shape& s : test_shapes()) {
    for (int i = 0; i < 8; ++i) {
      const Direction d = Direction::from_angle(ang(rng));
      CHECK(exponential_moment(s, d, 0.0) == doctest::Approx(s.area()).epsilon(1e-4));
    }
  }
}

TEST_CASE("p-regularity fits") {
  const Shape disk = Shape::disk({0.2, -0.1}, 0.3);
  for (double a : {0.0, 0.9, 2.5}) {
    const auto prof = estimate_p_regularity(disk, Direction::from_angle(a), 0.3 / 4, 16);
    CHECK(std::abs(prof.fitted_p - 1.5) < 0.05);
    CHECK(prof.fit_r2 > 0.99);
    for (size_t i = 1; i < prof.depths.size(); ++i) CHECK(prof.depths[i] > prof.depths[i - 1]);
  }
  const auto cone = estimate_p_regularity(Shape::cone_fixture(), Direction(Vec2{0, -1}), 0.2, 12);
  CHECK(cone.fitted_p == doctest::Approx(2.0).epsilon(1e-9));
  const auto square = estimate_p_regularity(Shape::rectangle({-1, -1}, {1, 1}), Direction(Vec2{1, 0}), 0.5, 12);
  CHECK(square.fitted_p == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(estimate_p_regularity(disk, Direction(Vec2{1, 0}), 0.1, 4), InvalidArgument);
}

TEST_CASE("exponential moment matches closed forms and polar quadrature") {
  // Disk: int exp(a x1) over the disk = 2 pi r I1(a r) / a.
  const double r = 0.3;
  const Shape disk = Shape::disk({0.2, -0.1}, r);
  for (double a : {1.0, 20.0, 80.0, 400.0}) {
    const double expected = 2 * kPi * r * std::cyl_bessel_i(1.0, a * r) / a * std::exp(-a * r);
    CHECK(exponential_moment(disk, Direction::from_angle(0.3), a) == doctest::Approx(expected).epsilon(1e-8));
  }
  // Square, flat side: 2 (1 - exp(-2a)) / a.
  const Shape sq = Shape::rectangle({-1, -1}, {1, 1});
  for (double a : {0.5, 20.0, 400.0}) {
    CHECK(exponential_moment(sq, Direction(Vec2{1, 0}), a) ==
          doctest::Approx(2 * (1 - std::exp(-2 * a)) / a).epsilon(1e-8));
  }
  // Cone fixture, any direction: polar tensor Gauss-Legendre is exact in shape.
  const Shape cone = Shape::cone_fixture();
  for (double ang : {-kPi / 2, 0.6, 2.0}) {
    const Direction d = Direction::from_angle(ang);
    for (double a : {1.0, 20.0, 200.0}) {
      const double oracle = testoracle::cone_moment_polar(d.omega(), support_function(cone, d), a);
      CHECK(exponential_moment(cone, d, a) == doctest::Approx(oracle).epsilon(1e-8));
    }
  }
}

TEST_CASE("masked tensor quadrature agrees at moderate rates") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> ang(0, 2 * kPi);
  for (const Shape& s : test_shapes()) {
    const Direction d = Direction::from_angle(ang(rng));
    const double h = support_function(s, d);
    const double oracle = testoracle::masked_tensor_integral(
        s, [&](Vec2 x) { return std::exp(-4.0 * (h - dot(x, d.omega()))); }, 512);
    CHECK(exponential_moment(s, d, 4.0) == doctest::Approx(oracle).epsilon(2e-3));
  }
}

TEST_CASE("l1/l2 ratio") {
  for (const Shape& s : test_shapes()) {
    CHECK(l1_l2_ratio(s, Direction::from_angle(0.4), 0.0) == doctest::Approx(std::sqrt(s.area())));
    for (double tau : {10.0, 20.0, 40.0}) {
      const Direction d = Direction::from_angle(1.3);
      const double r1 = l1_l2_ratio(s, d, tau);
      CHECK(r1 > 0.0);
      CHECK(l1_l2_ratio(s, d, 4 * tau) < r1);
    }
  }
  const Shape disk = Shape::disk({0, 0}, 0.3);
  CHECK(l1_l2_ratio(disk, Direction(Vec2{1, 0}), 40) < l1_l2_ratio(disk, Direction(Vec2{1, 0}), 10));
  double lo = 1e300, hi = 0;
  for (double tau = 10; tau <= 200; tau += 10) {
    const double v = l1_l2_ratio(disk, Direction(Vec2{1, 0}), tau) * std::sqrt(tau);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi / lo < 2.0);
}

TEST_CASE("weighted lower bound stays away from zero") {
  const Shape disk = Shape::disk({0.2, -0.1}, 0.3);
  const Shape cone = Shape::cone_fixture();
  double dlo = 1e300, dhi = 0, clo = 1e300;
  for (double tau = 10; tau <= 200; tau *= 1.35) {
    const double b = weighted_l2_lower_bound(disk, Direction(Vec2{1, 0}), tau, 1.5);
    dlo = std::min(dlo, b);
    dhi = std::max(dhi, b);
    clo = std::min(clo, weighted_l2_lower_bound(cone, Direction(Vec2{0, -1}), tau, 2.0));
  }
  CHECK(dlo > 0.05);
  CHECK(dhi < 10.0);
  CHECK(clo > 0.05);
  // Small tau limit: tau^(p/2) |D|^(1/2).
  const double tiny = 1e-8;
  CHECK(weighted_l2_lower_bound(disk, Direction(Vec2{1, 0}), tiny, 1.5) ==
        doctest::Approx(std::pow(tiny, 0.75) * std::sqrt(disk.area())).epsilon(1e-5));
}

TEST_CASE("hausdorff distance of a circumscribed polygon") {
  const Shape disk = Shape::disk({0, 0}, 1.0);
  std::vector<Vec2> square{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  CHECK(hausdorff_distance(square, disk) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-5));
  const auto own = disk.boundary_polyline(4096);
  CHECK(hausdorff_distance(own, disk) < 1e-9);
}
