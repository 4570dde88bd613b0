#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "enclab/errors.hpp"
#include "enclab/indicator.hpp"

using namespace enclab;

namespace {

const BoundingBox kSquare{{-1.0, -1.0}, {1.0, 1.0}};
const Vec2 kCenter{0.2, -0.1};
constexpr double kRadius = 0.3;

std::shared_ptr<const Mesh> square_mesh(int n) { return std::make_shared<const Mesh>(build_uniform(kSquare, n, n)); }

std::shared_ptr<const Mesh> annulus_mesh(int n_r, int n_t) {
  return std::make_shared<const Mesh>(
      build_ogrid(Shape::rectangle({-1.0, -1.0}, {1.0, 1.0}), Shape::disk(kCenter, kRadius), n_r, n_t));
}

PotentialField disk_jump(const Mesh& mesh, cplx v0, cplx jump) {
  const Shape d = Shape::disk(kCenter, kRadius);
  const auto n = static_cast<Eigen::Index>(mesh.nodes.size());
  return PotentialField::make(CVector::Constant(n, v0), interpolate(mesh, [&](Vec2 x) {
                                return d.contains(x) ? jump : cplx(0.0);
                              }));
}

std::vector<double> sweep(double lo, double hi, int n) {
  std::vector<double> t(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return t;
}

// Same mesh with node labels permuted.
Mesh relabel(const Mesh& m, unsigned seed) {
  std::vector<int> perm(m.nodes.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  Mesh out;
  out.nodes.resize(m.nodes.size());
  for (size_t i = 0; i < m.nodes.size(); ++i) out.nodes[static_cast<size_t>(perm[i])] = m.nodes[i];
  for (auto t : m.triangles) {
    for (int& v : t) v = perm[static_cast<size_t>(v)];
    out.triangles.push_back(t);
  }
  for (auto e : m.boundary_edges) {
    e.a = perm[static_cast<size_t>(e.a)];
    e.b = perm[static_cast<size_t>(e.b)];
    out.boundary_edges.push_back(e);
  }
  return out;
}

}  // namespace

TEST_CASE("indicator samples live in log space") {
  IndicatorSample s;
  s.tau = 400.0;
  s.shift = 1.0;
  s.scaled = cplx(-2.0, 0.5);
  s.scale = 1.0;
  CHECK(s.log_abs() == doctest::Approx(std::log(std::abs(s.scaled)) + 800.0));
  CHECK(s.log_part(Part::kRe) == doctest::Approx(std::log(2.0) + 800.0));
  CHECK(s.log_part(Part::kIm) == doctest::Approx(std::log(0.5) + 800.0));
  CHECK(s.sign_part(Part::kRe) == -1);
  CHECK(s.sign_part(Part::kIm) == 1);
  CHECK(s.sign_part(Part::kAbs) == 1);
  CHECK(std::isinf(s.value().real()));  // e^800 overflows; the log form does not

  s.scaled = cplx(0.0, 1.0);
  CHECK(s.sign_part(Part::kRe) == 0);
  CHECK(std::isinf(s.log_part(Part::kRe)));

  CHECK(is_reliable(1e-10, 1.0));
  CHECK_FALSE(is_reliable(1e-14, 1.0));
  CHECK_FALSE(is_reliable(cplx(NAN, 0.0), 1.0));
}

TEST_CASE("series validation") {
  IndicatorSeries s;
  for (double t : {1.0, 2.0}) s.samples.push_back({t, 1.0});
  CHECK_THROWS_AS(s.validate(), InvariantViolation);
  s.samples.push_back({2.0, 1.0});
  CHECK_THROWS_AS(s.validate(), InvariantViolation);
  s.samples.back().tau = 3.0;
  s.validate();
  s.samples[1].scaled = cplx(INFINITY, 0.0);
  CHECK_THROWS_AS(s.validate(), InvariantViolation);
  s.samples[1] = {2.0, 1.0, 0.0, 1.0, false};
  CHECK(s.reliable().size() == 2);
}

TEST_CASE("penetrable: zero perturbation gives zero samples") {
  const auto mesh = square_mesh(24);
  const PenetrableModel model(mesh, PotentialField::constant(mesh->nodes.size(), 1.0), CgoSource::exponential(1.0));
  const auto taus = sweep(2.0, 8.0, 4);
  const IndicatorSeries s = enclosure_penetrable(model, Direction::from_angle(0.7), taus);
  CHECK(s.pipeline == Pipeline::kPenetrable);
  for (const auto& x : s.samples) CHECK(std::abs(x.scaled) == 0.0);
  CHECK(std::abs(alessandrini_oracle(model, Direction::from_angle(0.7), 5.0).scaled) == 0.0);
  CHECK_THROWS_AS(enclosure_penetrable(model, Direction(), sweep(1.0, 2.0, 2)), InvalidArgument);
}

TEST_CASE("penetrable: boundary pairing equals the volume identity") {
  const auto mesh = square_mesh(48);
  for (cplx jump : {cplx(1.0), cplx(0.0, 1.0), cplx(-1.0)}) {
    const PenetrableModel model(mesh, disk_jump(*mesh, 1.0, jump), CgoSource::exponential(1.0));
    for (const Direction& d : uniform_directions(5, 0.2)) {
      for (double tau : {3.0, 9.0, 15.0}) {
        const IndicatorSample a = model.indicator(d, tau);
        const IndicatorSample b = alessandrini_oracle(model, d, tau);
        CHECK(a.reliable);
        CHECK(a.shift == b.shift);
        CHECK(std::abs(a.scaled - b.scaled) <= 1e-7 * std::abs(b.scaled));
      }
    }
  }
}

TEST_CASE("penetrable: sign follows the jump on the top half of the sweep") {
  const auto mesh = square_mesh(64);
  const auto taus = sweep(4.0, 20.0, 8);
  const Direction d = Direction::from_angle(0.5);
  struct Case {
    cplx jump;
    Part part;
    int sign;
  };
  for (const Case& c : {Case{1.0, Part::kRe, 1}, Case{-1.0, Part::kRe, -1}, Case{cplx(0, 1), Part::kIm, 1},
                        Case{cplx(0, -1), Part::kIm, -1}}) {
    const PenetrableModel model(mesh, disk_jump(*mesh, 1.0, c.jump), CgoSource::exponential(1.0));
    const IndicatorSeries s = enclosure_penetrable(model, d, taus);
    for (size_t i = taus.size() / 2; i < taus.size(); ++i) CHECK(s.samples[i].sign_part(c.part) == c.sign);
  }
}

TEST_CASE("penetrable: imaginary potential first term is the weighted area integral") {
  // V = i beta on all of Omega, so int V v conj(v) = i beta int e^{2 tau (x.omega - shift)}
  const auto mesh = square_mesh(96);
  const double beta = 0.5;
  const auto n = static_cast<Eigen::Index>(mesh->nodes.size());
  const PenetrableModel model(mesh, PotentialField::make(CVector::Constant(n, 1.0), CVector::Constant(n, cplx(0.0, beta))),
                              CgoSource::exponential(1.0));
  for (double angle : {0.0, 0.6, 2.0}) {
    const Direction d = Direction::from_angle(angle);
    const double tau = 2.0;
    const auto t = model.volume_terms(d, tau);
    const Vec2 w = d.omega();
    const double shift = model.probes(d, tau).shift;
    // closed form of int_{[-1,1]^2} e^{2 tau x.w} as a product of 1D integrals
    auto one_d = [&](double c) {
      const double a = 2.0 * tau * c;
      return std::abs(a) < 1e-12 ? 2.0 : (std::exp(a) - std::exp(-a)) / a;
    };
    const double exact = beta * one_d(w.x) * one_d(w.y) * std::exp(-2.0 * tau * shift);
    CHECK(std::abs(t.first.real()) <= 1e-10 * exact);
    CHECK(t.first.imag() == doctest::Approx(exact).epsilon(5e-3));
  }
}

TEST_CASE("penetrable: nodal probes when the mesh is not uniform") {
  const auto mesh = square_mesh(32);
  CgoSource src = CgoSource::exponential(1.0);
  src.discrete_probes = false;
  const PenetrableModel nodal(mesh, disk_jump(*mesh, 1.0, 1.0), src);
  const PenetrableModel exact(mesh, disk_jump(*mesh, 1.0, 1.0), CgoSource::exponential(1.0));
  const Direction d = Direction::from_angle(0.3);
  const auto pn = nodal.probes(d, 6.0);
  const auto pe = exact.probes(d, 6.0);
  // same modulus, slightly different oscillation
  for (Eigen::Index i = 0; i < pn.v.size(); ++i) CHECK(std::abs(pn.v[i]) == doctest::Approx(std::abs(pe.v[i])).epsilon(1e-12));
  CHECK((pn.v - pe.v).norm() > 1e-6 * pe.v.norm());
  // both paths still agree because they share the discrete fields
  const IndicatorSample a = nodal.indicator(d, 6.0);
  CHECK(std::abs(a.scaled - alessandrini_oracle(nodal, d, 6.0).scaled) <= 1e-7 * std::abs(a.scaled));
}

TEST_CASE("penetrable: Faddeev probes") {
  const auto mesh = square_mesh(32);
  auto grid = std::make_shared<const PotentialGrid>(PotentialGrid::sample(kSquare, 32, [](Vec2) { return cplx(1.0); }));
  const PenetrableModel model(mesh, disk_jump(*mesh, 1.0, 1.0), CgoSource::faddeev(grid));
  const Direction d = Direction::from_angle(1.0);
  const IndicatorSample a = model.indicator(d, 5.0);
  CHECK(a.reliable);
  CHECK(a.scaled.real() > 0.0);
  CHECK(std::abs(a.scaled - alessandrini_oracle(model, d, 5.0).scaled) <= 1e-7 * std::abs(a.scaled));
}

TEST_CASE("absorbing medium map") {
  const Mesh mesh = build_uniform(kSquare, 16, 16);
  const Shape d = Shape::disk(kCenter, kRadius);
  auto one = [](Vec2) { return 1.0; };
  const PotentialField p = absorbing_medium_potentials(mesh, 1.0, 0.0, one, [&](Vec2 x) { return d.contains(x) ? 2.0 : 0.0; }, 4.0);
  for (size_t i = 0; i < mesh.nodes.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const bool in = d.contains(mesh.nodes[i]);
    CHECK(p.V0[ii] == cplx(1.0, 0.0));
    CHECK(p.V[ii] == (in ? cplx(0.0, 0.5) : cplx(0.0)));
    CHECK(p.mask[i] == (in ? 1 : 0));
  }
  const PotentialField flat = absorbing_medium_potentials(mesh, 1.0, 0.0, one, [](Vec2) { return 0.0; }, 2.0);
  CHECK(flat.V.cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::count(flat.mask.begin(), flat.mask.end(), 1) == 0);
  CHECK_THROWS_AS(absorbing_medium_potentials(mesh, 1.0, 0.0, one, one, 0.0), InvalidArgument);
}

TEST_CASE("impenetrable: no obstacle gives zero") {
  const auto mesh = square_mesh(16);
  const ImpenetrableModel model(mesh, 1.0, Impedance::constant(mesh->nodes.size(), 0.0));
  CHECK_FALSE(model.has_obstacle());
  const IndicatorSeries s = enclosure_impenetrable(model, Direction(), sweep(2.0, 6.0, 3));
  CHECK(s.pipeline == Pipeline::kImpenetrable);
  for (const auto& x : s.samples) CHECK(x.scaled == cplx(0.0));
  CHECK(probe_indicator(model, {0.1, 0.2}) == 0.0);
}

TEST_CASE("impenetrable: representation identity for plane waves") {
  const auto mesh = annulus_mesh(24, 96);
  for (cplx lambda : {cplx(0.0), cplx(1.0, 1.0), cplx(0.0, 2.0)}) {
    const ImpenetrableModel model(mesh, 1.0, Impedance::constant(mesh->nodes.size(), lambda));
    for (const ProbeField& f : plane_wave_family(1.0, 8)) {
      const RepresentationTerms t = representation_check(model, f.value, f.gradient);
      CHECK(std::abs(t.lhs - t.rhs()) < 1e-2 * std::abs(t.lhs));
      if (lambda.real() == 0.0) {
        CHECK(t.re_lambda_w == 0.0);
        CHECK(t.re_lambda_v == 0.0);
      }
      if (lambda.imag() == 0.0) CHECK(t.im_lambda_cross == 0.0);
    }
  }
}

TEST_CASE("impenetrable: interior term is the Helmholtz energy on the disk") {
  // int_D |grad v|^2 - k^2 |v|^2 against direct area quadrature for a plane wave and an exponential
  const auto mesh = annulus_mesh(24, 96);
  const double k = 1.3;
  const ImpenetrableModel model(mesh, k, Impedance::constant(mesh->nodes.size(), 0.0));
  std::vector<ProbeField> fields = plane_wave_family(k, 3);
  const std::vector<double> taus{3.0};
  for (auto& f : cgo_family(Direction::from_angle(0.4), taus, k, 0.5)) fields.push_back(f);
  for (const ProbeField& f : fields) {
    const RepresentationTerms t = model.representation(f.value, f.gradient);
    auto energy = [&](Vec2 x) {
      const CVec2 g = f.gradient(x);
      return std::norm(g.x) + std::norm(g.y) - k * k * std::norm(f.value(x));
    };
    const double direct = polygon_integral(model.hole_polygon(), energy, 24);
    CHECK(t.interior_v == doctest::Approx(direct).epsilon(1e-8));
  }
}

TEST_CASE("impenetrable: sound-hard samples are positive at large tau") {
  const auto mesh = annulus_mesh(24, 96);
  const ImpenetrableModel model(mesh, 1.0, Impedance::constant(mesh->nodes.size(), 0.0));
  const auto taus = sweep(4.0, 20.0, 6);
  for (const Direction& d : uniform_directions(4, 0.3)) {
    const IndicatorSeries s = enclosure_impenetrable(model, d, taus);
    for (size_t i = taus.size() / 2; i < taus.size(); ++i) {
      CHECK(s.samples[i].reliable);
      CHECK(s.samples[i].sign_part(Part::kRe) == 1);
    }
  }
}

TEST_CASE("probe indicator") {
  const auto mesh = annulus_mesh(24, 96);
  const ImpenetrableModel model(mesh, 1.0, Impedance::constant(mesh->nodes.size(), 0.0));
  SUBCASE("grows toward the obstacle") {
    const Vec2 dir{std::cos(2.0), std::sin(2.0)};
    double prev = -INFINITY;
    for (double dist : {0.5, 0.3, 0.2, 0.12, 0.08}) {
      const double v = probe_indicator(model, kCenter + (kRadius + dist) * dir);
      CHECK(std::isfinite(v));
      CHECK(v > prev);
      prev = v;
    }
  }
  SUBCASE("points too close or outside are rejected") {
    CHECK_THROWS_AS(model.probe(kCenter), SourceTooClose);
    CHECK_THROWS_AS(model.probe(kCenter + Vec2{kRadius + 1e-3, 0.0}), SourceTooClose);
    CHECK_THROWS_AS(model.probe({0.999, 0.5}), SourceTooClose);
    CHECK_THROWS_AS(model.probe({1.5, 0.0}), SourceTooClose);
  }
  SUBCASE("node labels do not matter") {
    const auto shuffled = std::make_shared<const Mesh>(relabel(*mesh, 11));
    validate(*shuffled);
    const ImpenetrableModel other(shuffled, 1.0, Impedance::constant(shuffled->nodes.size(), 0.0));
    for (Vec2 y : {Vec2{-0.5, 0.5}, Vec2{0.6, 0.3}}) {
      CHECK(other.probe(y) == doctest::Approx(model.probe(y)).epsilon(1e-9));
    }
  }
}

TEST_CASE("inequality check") {
  const auto mesh = annulus_mesh(24, 96);
  const ImpenetrableModel model(mesh, 1.0, Impedance::constant(mesh->nodes.size(), 0.0));
  std::vector<ProbeField> family = plane_wave_family(1.0, 16);
  const std::vector<double> taus{4.0, 8.0, 12.0};
  for (auto& f : cgo_family(Direction::from_angle(0.2), taus, 1.0, 0.5)) family.push_back(f);
  family.push_back({"zero", [](Vec2) { return cplx(0.0); }, [](Vec2) { return CVec2{}; }});

  const InequalityReport r = inequality_check(model, family, 10.0);
  CHECK(r.rows.size() == 19);
  CHECK(r.excluded == 1);
  CHECK(r.feasible);
  CHECK(r.c1 > 0.0);
  CHECK(r.c1 <= 1.0);
  CHECK(std::isfinite(r.sup_m_over_c));
  for (const auto& row : r.rows) {
    CHECK(row.c == doctest::Approx(row.a + row.b));
    CHECK(row.m >= r.c1 * row.a - r.c2_cap * row.b - 1e-12 * row.c);
    CHECK(row.m >= 0.5 * r.c1 * row.a - r.c2 * row.b - 1e-12 * row.c);
  }

  const std::vector<ProbeField> only_zero(family.end() - 1, family.end());
  CHECK_THROWS_AS(inequality_check(model, only_zero, 1.0), EmptyFamily);
  CHECK_THROWS_AS(inequality_check(model, {}, 1.0), EmptyFamily);
  CHECK_THROWS_AS(inequality_check(model, family, -1.0), InvalidArgument);
}
