#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "enclab/cgo.hpp"
#include "enclab/errors.hpp"
#include "enclab/kernels.hpp"

using namespace enclab;

namespace {

const BoundingBox kSquare{{-1.0, -1.0}, {1.0, 1.0}};

std::function<cplx(Vec2)> disk_potential(double radius, cplx value) {
  return [=](Vec2 x) { return dot(x, x) < radius * radius ? value : cplx(0.0); };
}

// Dense reference for the fixed point Psi = G (V0 (1 + Psi)) on the same padded box: the
// periodic kernel g(dx, dy) = n^-2 sum_xi e^{i xi.(dx, dy)} / (|xi|^2 - 2i z.xi) over
// half-integer frequencies is summed directly and the system is solved by LU.
std::vector<cplx> dense_faddeev(const PotentialGrid& v0, const SpectralParam& p) {
  const CgoGrid& g = v0.grid;
  const int n = faddeev_box_size(g);
  const double box = n * g.h;
  const int ox = (n - g.nx) / 2, oy = (n - g.ny) / 2;
  std::vector<double> xi(static_cast<size_t>(n));
  for (int m = 0; m < n; ++m) xi[static_cast<size_t>(m)] = 2.0 * kPi * ((m < n / 2 ? m : m - n) + 0.5) / box;
  const int w = 2 * n - 1;
  std::vector<cplx> kern(static_cast<size_t>(w * w));
  for (int dj = -(n - 1); dj < n; ++dj) {
    for (int di = -(n - 1); di < n; ++di) {
      cplx s = 0.0;
      for (int b = 0; b < n; ++b) {
        for (int a = 0; a < n; ++a) {
          const double xa = xi[static_cast<size_t>(a)], xb = xi[static_cast<size_t>(b)];
          const cplx sym = 1.0 / (cplx(xa * xa + xb * xb) - 2.0 * kI * (p.z.x * xa + p.z.y * xb));
          s += sym * std::polar(1.0, xa * di * g.h + xb * dj * g.h);
        }
      }
      kern[static_cast<size_t>((dj + n - 1) * w + di + n - 1)] = s / static_cast<double>(n * n);
    }
  }
  const int nn = n * n;
  std::vector<cplx> vb(static_cast<size_t>(nn), 0.0);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) vb[static_cast<size_t>((oy + j) * n + ox + i)] = v0.values[g.index(i, j)];
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(nn, nn);
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(nn);
  for (int k = 0; k < nn; ++k) {
    for (int l = 0; l < nn; ++l) {
      if (vb[static_cast<size_t>(l)] == 0.0) continue;
      const int di = k % n - l % n, dj = k / n - l / n;
      const cplx gk = kern[static_cast<size_t>((dj + n - 1) * w + di + n - 1)] * vb[static_cast<size_t>(l)];
      A(k, l) -= gk;
      rhs[k] += gk;
    }
  }
  const Eigen::VectorXcd sol = A.partialPivLu().solve(rhs);
  std::vector<cplx> out(g.size());
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) out[g.index(i, j)] = sol[(oy + j) * n + ox + i];
  return out;
}

}  // namespace

TEST_CASE("spectral parameter algebra") {
  const Direction e1(Vec2{1.0, 0.0});
  const SpectralParam a = SpectralParam::exponential(e1, 5.0, 0.0);
  CHECK(std::abs(a.z.x - cplx(5.0, 0.0)) < 1e-15);
  CHECK(std::abs(a.z.y - cplx(0.0, 5.0)) < 1e-15);
  CHECK(std::abs(dot(a.z, a.z)) < 1e-12);

  const SpectralParam b = SpectralParam::exponential(e1, 1.0, 1.0);
  CHECK(std::abs(b.z.y - cplx(0.0, std::sqrt(2.0))) < 1e-15);
  CHECK(std::abs(dot(b.z, b.z) + 1.0) < 1e-12);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ang(0.0, 2 * kPi), tau(0.1, 200.0), kk(0.0, 10.0);
  for (int t = 0; t < 200; ++t) {
    const SpectralParam p = SpectralParam::exponential(Direction::from_angle(ang(rng)), tau(rng), kk(rng));
    CHECK(std::abs(dot(p.z, p.z) + p.k2) <= 1e-12 * std::max(1.0, p.tau * p.tau));
    const SpectralParam c = p.conjugate();
    CHECK(std::abs(c.z.x - std::conj(p.z.x)) < 1e-12 * p.tau);
    CHECK(std::abs(c.z.y - std::conj(p.z.y)) < 1e-12 * p.tau);
  }

  const cplx v0(2.0, 0.7);
  const SpectralParam q = SpectralParam::for_constant(Direction::from_angle(0.4), 3.0, v0);
  CHECK(std::abs(dot(q.z, q.z) + v0) < 1e-12);
  CHECK(std::abs(dot(q.conjugate().z, q.conjugate().z) + v0) < 1e-12);

  CHECK_THROWS_AS(SpectralParam::exponential(e1, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(SpectralParam::exponential(e1, 1.0, -1.0), InvalidArgument);
}

TEST_CASE("closed-form family") {
  const Direction d = Direction::from_angle(0.9);
  const CGOField f = make_exp_cgo(d, 4.0, 1.5);
  CHECK(f.closed_form());
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const Vec2 x{u(rng), u(rng)};
    CHECK(std::abs(std::abs(f.value(x)) - std::exp(4.0 * dot(x, d.omega()))) <= 1e-12 * std::exp(4.0 * dot(x, d.omega())));
    // gradient against central differences
    const double s = 0.3, eps = 1e-5;
    const CVec2 gr = f.gradient_scaled(x, s);
    const cplx fx = (f.value_scaled(x + Vec2{eps, 0}, s) - f.value_scaled(x - Vec2{eps, 0}, s)) / (2 * eps);
    const cplx fy = (f.value_scaled(x + Vec2{0, eps}, s) - f.value_scaled(x - Vec2{0, eps}, s)) / (2 * eps);
    CHECK(std::abs(gr.x - fx) < 1e-6 * std::abs(gr.x) + 1e-9);
    CHECK(std::abs(gr.y - fy) < 1e-6 * std::abs(gr.y) + 1e-9);
    // Helmholtz equation through a 5-point Laplacian
    const double hh = 1e-3;
    const cplx lap = (f.value(x + Vec2{hh, 0}) + f.value(x - Vec2{hh, 0}) + f.value(x + Vec2{0, hh}) +
                      f.value(x - Vec2{0, hh}) - 4.0 * f.value(x)) / (hh * hh);
    CHECK(std::abs(lap + 1.5 * 1.5 * f.value(x)) < 1e-4 * std::abs(f.value(x)) * 16.0);
  }
  const CGOField c = conjugate_cgo(PotentialGrid{}, f);
  for (int t = 0; t < 20; ++t) {
    const Vec2 x{u(rng), u(rng)};
    const cplx expect = std::exp(std::conj(f.param.z.x) * x.x + std::conj(f.param.z.y) * x.y);
    CHECK(std::abs(c.value(x) - expect) < 1e-12 * std::abs(expect));
  }
  const PotentialGrid pg = PotentialGrid::sample(kSquare, 32, [](Vec2) { return cplx(2.25); });
  CHECK(cgo_residual(f, pg) < 1e-13);
  const cplx cv(1.0, 0.5);
  const PotentialGrid pc = PotentialGrid::sample(kSquare, 32, [=](Vec2) { return cv; });
  CHECK(cgo_residual(make_exp_cgo(d, 6.0, cv), pc) < 1e-13);
}

TEST_CASE("discrete exponentials lie in the kernel of the assembled operator") {
  const Mesh mesh = build_uniform({{-1.0, -0.5}, {1.0, 1.0}}, 40, 24);
  const auto steps = uniform_steps(mesh);
  REQUIRE(steps.has_value());
  std::vector<char> boundary(mesh.nodes.size(), 0);
  for (const auto& e : mesh.boundary_edges) boundary[static_cast<size_t>(e.a)] = boundary[static_cast<size_t>(e.b)] = 1;
  for (cplx kappa : {cplx(1.0), cplx(4.0, 1.5), cplx(0.0)}) {
    const SpMat a = assemble_helmholtz(mesh, CVector::Constant(static_cast<Eigen::Index>(mesh.nodes.size()), kappa));
    for (const Direction& d : uniform_directions(8, 0.1)) {
      for (double tau : {2.0, 10.0, 20.0}) {
        const SpectralParam p = SpectralParam::for_constant(d, tau, kappa);
        for (const SpectralParam& q : {p, p.conjugate()}) {
          const CVec2 zh = discrete_frequency(q, steps->x, steps->y);
          CHECK(zh.x.real() == q.z.x.real());
          CHECK(zh.y.real() == q.z.y.real());
          const CVector v = sample_exponential(mesh, zh, tau, 1.0);
          const CVector r = a * v;
          for (Eigen::Index i = 0; i < r.size(); ++i) {
            if (boundary[static_cast<size_t>(i)]) continue;
            double row = 0.0;
            for (SpMat::InnerIterator it(a, i); it; ++it) row += std::abs(it.value()) * std::abs(v[it.index()]);
            REQUIRE(std::abs(r[i]) <= 1e-11 * row);
          }
        }
      }
    }
  }
}

TEST_CASE("discrete frequency converges to the continuum one at second order") {
  const SpectralParam p = SpectralParam::for_constant(Direction::from_angle(0.4), 8.0, cplx(2.0, 0.5));
  double prev = 0.0;
  for (double h : {0.04, 0.02, 0.01}) {
    const CVec2 zh = discrete_frequency(p, h, h);
    const double err = std::abs(zh.x - p.z.x) + std::abs(zh.y - p.z.y);
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.05));
    prev = err;
  }
  // real potential: the partner frequency is the conjugate, as in the continuum
  const SpectralParam r = SpectralParam::for_constant(Direction::from_angle(1.1), 6.0, cplx(1.0));
  const CVec2 a = discrete_frequency(r, 0.02, 0.03), b = discrete_frequency(r.conjugate(), 0.02, 0.03);
  CHECK(std::abs(a.x - std::conj(b.x)) < 1e-12 * std::abs(a.x) + 1e-12);
  CHECK(std::abs(a.y - std::conj(b.y)) < 1e-12 * std::abs(a.y) + 1e-12);
  CHECK_THROWS_AS(discrete_frequency(r, 0.0, 0.1), InvalidArgument);
}

TEST_CASE("potential grid sampling") {
  const PotentialGrid g = PotentialGrid::sample(BoundingBox{{0, 0}, {2, 1}}, 20, [](Vec2 x) { return cplx(x.x, x.y); });
  CHECK(g.grid.nx == 20);
  CHECK(g.grid.ny == 10);
  CHECK(g.values.size() == 21u * 11u);
  CHECK(g.values[g.grid.index(20, 10)] == cplx(2.0, 1.0));
  CHECK_FALSE(g.is_real());
  CHECK_THROWS_AS(PotentialGrid::sample(BoundingBox{{0, 0}, {2, 1.05}}, 20, [](Vec2) { return cplx(0); }),
                  InvalidArgument);
  CHECK_THROWS_AS(PotentialGrid::sample(kSquare, 4, [](Vec2) { return cplx(0); }), InvalidArgument);
  CHECK(faddeev_box_size(PotentialGrid::sample(kSquare, 256, [](Vec2) { return cplx(0); }).grid) == 1024);
}

TEST_CASE("zero potential gives zero remainder in one iteration") {
  const PotentialGrid g = PotentialGrid::sample(kSquare, 32, [](Vec2) { return cplx(0.0); });
  const CGOField f = solve_faddeev(g, Direction::from_angle(0.3), 10.0);
  CHECK(f.iterations == 1);
  CHECK(f.sup_psi == 0.0);
  CHECK(cgo_residual(f, g) == 0.0);
  const CGOField c = conjugate_cgo(g, f);
  for (int j = 0; j <= g.grid.ny; j += 7) {
    for (int i = 0; i <= g.grid.nx; i += 5) {
      const Vec2 x = g.grid.point(i, j);
      const cplx expect = std::exp(std::conj(f.param.z.x) * x.x + std::conj(f.param.z.y) * x.y);
      CHECK(std::abs(c.value(x) - expect) < 1e-12 * std::abs(expect));
    }
  }
}

TEST_CASE("Born solution matches a dense solve of the same discrete system") {
  const PotentialGrid g = PotentialGrid::sample(kSquare, 10, disk_potential(0.55, cplx(3.0, 1.0)));
  REQUIRE(faddeev_box_size(g.grid) == 32);
  for (double tau : {2.0, 6.0}) {
    const SpectralParam p = SpectralParam::exponential(Direction::from_angle(0.7), tau, 0.0);
    const CGOField f = solve_faddeev(g, p);
    const std::vector<cplx> ref = dense_faddeev(g, p);
    double err = 0.0, mag = 0.0;
    for (size_t k = 0; k < ref.size(); ++k) {
      err = std::max(err, std::abs(f.psi[k] - ref[k]));
      mag = std::max(mag, std::abs(ref[k]));
    }
    INFO("tau = " << tau << " err = " << err << " mag = " << mag);
    CHECK(mag > 1e-3);
    CHECK(err < 1e-8 * mag);
  }
}

TEST_CASE("remainder decays with tau and the field solves the equation") {
  const PotentialGrid g = PotentialGrid::sample(kSquare, 128, disk_potential(0.3, 1.0));
  const Direction d(Vec2{1.0, 0.0});
  double prev = INFINITY;
  for (double tau : {10.0, 20.0, 40.0}) {
    const CGOField f = solve_faddeev(g, d, tau);
    INFO("tau = " << tau << " sup = " << f.sup_psi << " iterations = " << f.iterations);
    CHECK(f.sup_psi < prev);
    prev = f.sup_psi;
    CHECK(f.sup_psi < 0.5);
    // pointwise sandwich
    for (int j = 0; j <= g.grid.ny; ++j) {
      for (int i = 0; i <= g.grid.nx; ++i) {
        const Vec2 x = g.grid.point(i, j);
        const double m = std::abs(f.value(x));
        const double e = std::exp(tau * dot(x, d.omega()));
        REQUIRE(m >= (1 - f.sup_psi) * e * (1 - 1e-14));
        REQUIRE(m <= (1 + f.sup_psi) * e * (1 + 1e-14));
      }
    }
    if (tau <= 20.0) CHECK(cgo_residual(f, g) < 1e-3);
  }
}

TEST_CASE("grid doubling leaves sup|Psi| stable") {
  const Direction d = Direction::from_angle(0.25);
  const auto v0 = disk_potential(0.3, 1.0);
  const double s128 = solve_faddeev(PotentialGrid::sample(kSquare, 128, v0), d, 10.0).sup_psi;
  const double s256 = solve_faddeev(PotentialGrid::sample(kSquare, 256, v0), d, 10.0).sup_psi;
  INFO(s128 << " vs " << s256);
  CHECK(std::abs(s256 - s128) < 0.05 * s256);
}

TEST_CASE("partner field: conjugate for real V0, not for complex V0") {
  const Direction d = Direction::from_angle(1.1);
  const PotentialGrid real_v0 = PotentialGrid::sample(kSquare, 64, disk_potential(0.4, 2.0));
  const CGOField f = solve_faddeev(real_v0, d, 8.0);
  const CGOField c = conjugate_cgo(real_v0, f);
  CHECK(c.param.z.x == std::conj(f.param.z.x));
  double diff = 0.0, top = 0.0;
  for (size_t k = 0; k < f.psi.size(); ++k) {
    diff = std::max(diff, std::abs(c.psi[k] - std::conj(f.psi[k])));
    top = std::max(top, std::abs(f.psi[k]));
  }
  CHECK(top > 1e-3);
  CHECK(diff < 1e-12);
  CHECK(cgo_residual(c, real_v0) < 1e-3);

  const PotentialGrid cplx_v0 = PotentialGrid::sample(kSquare, 64, disk_potential(0.4, cplx(2.0, 1.5)));
  const CGOField g = solve_faddeev(cplx_v0, d, 8.0);
  const CGOField gc = conjugate_cgo(cplx_v0, g);
  double gap = 0.0, vmax = 0.0;
  for (int j = 0; j <= cplx_v0.grid.ny; ++j) {
    for (int i = 0; i <= cplx_v0.grid.nx; ++i) {
      const Vec2 x = cplx_v0.grid.point(i, j);
      gap = std::max(gap, std::abs(gc.value(x) - std::conj(g.value(x))));
      vmax = std::max(vmax, std::abs(g.value(x)));
    }
  }
  INFO("gap " << gap << " vmax " << vmax);
  CHECK(gap > 1e-6 * vmax);
  CHECK(cgo_residual(gc, cplx_v0) < 1e-3);
}

TEST_CASE("bilinear transfer and gradients") {
  const PotentialGrid g = PotentialGrid::sample(kSquare, 64, disk_potential(0.4, 2.0));
  const CGOField f = solve_faddeev(g, Direction::from_angle(0.5), 6.0);
  // nodes reproduce the grid values exactly
  const Vec2 x = g.grid.point(17, 40);
  CHECK(std::abs(f.psi_at(x) - f.psi[g.grid.index(17, 40)]) < 1e-15);
  // midpoint is the average of the two neighbours
  const Vec2 mid = x + Vec2{0.5 * g.grid.h, 0.0};
  CHECK(std::abs(f.psi_at(mid) - 0.5 * (f.psi[g.grid.index(17, 40)] + f.psi[g.grid.index(18, 40)])) < 1e-15);
  const Vec2 y{0.123, -0.456};
  const double eps = 1e-6;
  const CVec2 gr = f.gradient_scaled(y, 0.5);
  const cplx fx = (f.value_scaled(y + Vec2{eps, 0}, 0.5) - f.value_scaled(y - Vec2{eps, 0}, 0.5)) / (2 * eps);
  CHECK(std::abs(gr.x - fx) < 1e-5 * std::abs(gr.x));
}

TEST_CASE("Born iteration reports divergence") {
  const PotentialGrid g = PotentialGrid::sample(kSquare, 32, disk_potential(0.8, 400.0));
  try {
    solve_faddeev(g, Direction(), 1.0);
    FAIL("expected BornDiverged");
  } catch (const BornDiverged& e) {
    CHECK(std::string(e.what()).find("factor") != std::string::npos);
  }
}

TEST_CASE("serial and parallel grid kernels agree") {
  std::mt19937 rng(11);
  std::normal_distribution<double> n01;
  const size_t n = 4096;
  std::vector<cplx> v(n), p(n), s(n);
  for (size_t i = 0; i < n; ++i) {
    v[i] = {n01(rng), n01(rng)};
    p[i] = {n01(rng), n01(rng)};
    s[i] = {n01(rng), n01(rng)};
  }
  std::vector<cplx> a(n), b(n);
  kernels::born_source(v, p, a);
  kernels::serial::born_source(v, p, b);
  CHECK(a == b);
  kernels::apply_symbol(a, s);
  kernels::serial::apply_symbol(b, s);
  CHECK(a == b);
}
