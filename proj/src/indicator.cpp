#include "enclab/indicator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "enclab/errors.hpp"
#include "enclab/hankel.hpp"
#include "enclab/quadrature.hpp"

namespace enclab {

namespace {

// sum_ij |eta_i| |A_ij| |x_j|
double abs_form(const SpMat& A, const CVector& eta, const CVector& x) {
  double s = 0.0;
  for (int col = 0; col < A.outerSize(); ++col) {
    const double xc = std::abs(x[col]);
    if (xc == 0.0) continue;
    for (SpMat::InnerIterator it(A, col); it; ++it) s += std::abs(eta[it.row()]) * std::abs(it.value()) * xc;
  }
  return s;
}

void check_taus(std::span<const double> taus) {
  if (taus.size() < 3) throw InvalidArgument(fmt::format("tau sweep needs at least 3 values, got {}", taus.size()));
  for (size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0.0) || !std::isfinite(taus[i])) throw InvalidArgument("tau values must be positive");
    if (i > 0 && !(taus[i] > taus[i - 1])) throw InvalidArgument("tau sweep must be strictly increasing");
  }
}

IndicatorSample make_sample(double tau, cplx scaled, double shift, double scale) {
  IndicatorSample s;
  s.tau = tau;
  s.scaled = scaled;
  s.shift = shift;
  s.scale = scale;
  s.reliable = is_reliable(scaled, scale);
  return s;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 d = b - a;
  const double t = std::clamp(dot(p - a, d) / dot(d, d), 0.0, 1.0);
  return norm(p - (a + t * d));
}

}  // namespace

const char* to_string(Pipeline p) { return p == Pipeline::kPenetrable ? "PENETRABLE" : "IMPENETRABLE"; }

const char* to_string(Part p) {
  switch (p) {
    case Part::kRe: return "RE";
    case Part::kIm: return "IM";
    case Part::kAbs: return "ABS";
  }
  return "?";
}

double IndicatorSample::log_abs() const { return std::log(std::abs(scaled)) + 2.0 * tau * shift; }

double IndicatorSample::log_part(Part p) const {
  double x = 0.0;
  switch (p) {
    case Part::kRe: x = scaled.real(); break;
    case Part::kIm: x = scaled.imag(); break;
    case Part::kAbs: x = std::abs(scaled); break;
  }
  return std::log(std::abs(x)) + 2.0 * tau * shift;
}

int IndicatorSample::sign_part(Part p) const {
  double x = 0.0;
  switch (p) {
    case Part::kRe: x = scaled.real(); break;
    case Part::kIm: x = scaled.imag(); break;
    case Part::kAbs: x = std::abs(scaled); break;
  }
  return (x > 0.0) - (x < 0.0);
}

cplx IndicatorSample::value() const { return scaled * std::exp(2.0 * tau * shift); }

bool is_reliable(cplx scaled, double scale) {
  return std::isfinite(std::abs(scaled)) &&
         std::abs(scaled) >= kReliabilityFactor * std::numeric_limits<double>::epsilon() * scale;
}

void IndicatorSeries::validate() const {
  if (samples.size() < 3) throw InvariantViolation("indicator series needs at least 3 samples");
  for (size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i].scaled.real()) || !std::isfinite(samples[i].scaled.imag())) {
      throw InvariantViolation(fmt::format("indicator sample at tau = {} is not finite", samples[i].tau));
    }
    if (i > 0 && !(samples[i].tau > samples[i - 1].tau)) throw InvariantViolation("tau not strictly increasing");
  }
}

std::vector<const IndicatorSample*> IndicatorSeries::reliable() const {
  std::vector<const IndicatorSample*> out;
  for (const auto& s : samples)
    if (s.reliable) out.push_back(&s);
  return out;
}

CgoSource CgoSource::exponential(cplx v0) {
  CgoSource s;
  s.kind = Kind::kExponential;
  s.v0 = v0;
  return s;
}

CgoSource CgoSource::faddeev(std::shared_ptr<const PotentialGrid> grid, FaddeevOptions options) {
  if (!grid) throw InvalidArgument("Faddeev source needs a potential grid");
  CgoSource s;
  s.kind = Kind::kFaddeev;
  s.grid = std::move(grid);
  s.options = options;
  return s;
}

// ---------------------------------------------------------------- penetrable

PenetrableModel::PenetrableModel(std::shared_ptr<const Mesh> mesh, PotentialField potentials, CgoSource source)
    : mesh_(std::move(mesh)), pot_(std::move(potentials)), source_(std::move(source)) {
  if (!mesh_) throw InvalidArgument("null mesh");
  pot_.validate(mesh_->nodes.size());
  const PotentialField base = PotentialField::make(pot_.V0, CVector::Zero(pot_.V0.size()));
  background_ = std::make_shared<LinearProblem>(dirichlet_problem(mesh_, base));
  perturbed_ = std::make_shared<LinearProblem>(dirichlet_problem(mesh_, pot_));
  mass_v_ = assemble_mass(*mesh_, pot_.V);
  if (source_.kind == CgoSource::Kind::kExponential && source_.discrete_probes &&
      (pot_.V0.array() == source_.v0).all()) {
    steps_ = uniform_steps(*mesh_);
  }
}

PenetrableModel::Probes PenetrableModel::probes(const Direction& dir, double tau) const {
  Probes p;
  p.shift = max_projection(*mesh_, dir.omega());
  if (source_.kind == CgoSource::Kind::kExponential && steps_) {
    const SpectralParam param = SpectralParam::for_constant(dir, tau, source_.v0);
    p.v = sample_exponential(*mesh_, discrete_frequency(param, steps_->x, steps_->y), tau, p.shift);
    p.v_star = sample_exponential(*mesh_, discrete_frequency(param.conjugate(), steps_->x, steps_->y), tau, p.shift);
    return p;
  }
  CGOField v;
  CGOField vs;
  if (source_.kind == CgoSource::Kind::kExponential) {
    v = make_exp_cgo(dir, tau, source_.v0);
    vs = conjugate_cgo(PotentialGrid{}, v);
  } else {
    v = solve_faddeev(*source_.grid, dir, tau, source_.options);
    vs = conjugate_cgo(*source_.grid, v, source_.options);
  }
  p.v = sample_scaled(v, *mesh_, p.shift);
  p.v_star = sample_scaled(vs, *mesh_, p.shift);
  return p;
}

IndicatorSample PenetrableModel::indicator(const Direction& dir, double tau) const {
  const Probes p = probes(dir, tau);
  const CVector vb = background_->solve(p.v);
  const CVector w = reflected_coeffs(vb);
  const CVector eta = boundary_lifting(*mesh_, p.v_star);
  // <dv/dnu - du/dnu, v*> = eta^T M_V v_h - eta^T A_{V0+V} w; bilinear, so no conjugation
  const cplx value = (eta.transpose() * (mass_v_ * vb))(0) - (eta.transpose() * (perturbed_->matrix() * w))(0);
  const double scale = abs_form(mass_v_, eta, vb) + abs_form(perturbed_->matrix(), eta, w);
  return make_sample(tau, value, p.shift, scale);
}

CVector PenetrableModel::reflected_coeffs(const CVector& vb) const {
  // A_{V0+V} (v_h + w) = 0 and A_{V0} v_h = 0 on free rows give A_{V0+V} w = M_V v_h
  const CVector load = mass_v_ * vb;
  return perturbed_->solve(CVector::Zero(vb.size()), &load);
}

PenetrableModel::VolumeTerms PenetrableModel::volume_terms(const Direction& dir, double tau) const {
  const Probes p = probes(dir, tau);
  const CVector vb = background_->solve(p.v);
  const CVector w = reflected_coeffs(vb);
  const CVector vs = background_->solve(p.v_star);
  const CVector mv = mass_v_ * vs;
  VolumeTerms t;
  t.first = (vb.transpose() * mv)(0);
  t.second = (w.transpose() * mv)(0);
  const double scale = abs_form(mass_v_, vb, vs) + abs_form(mass_v_, w, vs);
  t.total = make_sample(tau, t.first + t.second, p.shift, scale);
  return t;
}

FEField PenetrableModel::reflected(const CVector& boundary) const {
  return {mesh_, reflected_coeffs(background_->solve(boundary))};
}

FEField PenetrableModel::background(const CVector& boundary) const { return {mesh_, background_->solve(boundary)}; }

IndicatorSeries enclosure_penetrable(const PenetrableModel& model, const Direction& dir, std::span<const double> taus) {
  check_taus(taus);
  IndicatorSeries s;
  s.direction = dir;
  s.pipeline = Pipeline::kPenetrable;
  for (double tau : taus) s.samples.push_back(model.indicator(dir, tau));
  s.validate();
  return s;
}

IndicatorSample alessandrini_oracle(const PenetrableModel& model, const Direction& dir, double tau) {
  return model.volume_terms(dir, tau).total;
}

PotentialField absorbing_medium_potentials(const Mesh& mesh, double a0, double b0, const std::function<double(Vec2)>& a,
                                           const std::function<double(Vec2)>& b, double k) {
  if (!(k > 0.0)) throw InvalidArgument(fmt::format("absorbing map needs k > 0, got {}", k));
  const auto n = static_cast<Eigen::Index>(mesh.nodes.size());
  PotentialField p;
  p.V0 = CVector::Constant(n, cplx(a0, b0 / k));
  p.V = CVector::Zero(n);
  p.mask.assign(mesh.nodes.size(), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2 x = mesh.nodes[static_cast<size_t>(i)];
    const double ai = a(x), bi = b(x);
    if (ai != a0 || bi != b0) {
      p.V[i] = cplx(ai - a0, (bi - b0) / k);
      p.mask[static_cast<size_t>(i)] = 1;
    }
  }
  p.validate(mesh.nodes.size());
  return p;
}

// ---------------------------------------------------------------- impenetrable

double RepresentationTerms::term_scale() const {
  return std::abs(im_lambda_cross) + std::abs(re_lambda_w) + std::abs(grad_w) + std::abs(v0_w) + std::abs(re_lambda_v) +
         std::abs(interior_v);
}

ImpenetrableModel::ImpenetrableModel(std::shared_ptr<const Mesh> mesh, double k, Impedance lambda)
    : mesh_(std::move(mesh)), k_(k), lambda_(std::move(lambda)) {
  if (!mesh_) throw InvalidArgument("null mesh");
  if (!(k >= 0.0) || !std::isfinite(k)) throw InvalidArgument(fmt::format("k must be >= 0, got {}", k));
  if (mesh_->has_marker(Marker::kObstacle)) {
    hole_ = mesh_->boundary_loop(Marker::kObstacle);
    std::reverse(hole_.begin(), hole_.end());
  }
  const CVector v0 = CVector::Constant(static_cast<Eigen::Index>(mesh_->nodes.size()), cplx(k * k));
  problem_ = std::make_shared<LinearProblem>(impedance_problem(mesh_, v0, lambda_));
}

CVector ImpenetrableModel::robin_load(const ScalarFn& v, const GradFn& grad) const {
  CVector load = CVector::Zero(static_cast<Eigen::Index>(mesh_->nodes.size()));
  for (const BoundaryEdge& e : mesh_->boundary_edges) {
    if (e.marker != Marker::kObstacle) continue;
    const Vec2 pa = mesh_->nodes[static_cast<size_t>(e.a)], pb = mesh_->nodes[static_cast<size_t>(e.b)];
    const double len = norm(pb - pa);
    const Vec2 nu = perp(pb - pa) / len;  // domain on the left: out of D
    for (const auto& q : quad::kLine4) {
      const Vec2 x = pa + q.s * (pb - pa);
      const cplx lam = (1.0 - q.s) * lambda_.lambda[e.a] + q.s * lambda_.lambda[e.b];
      const cplx f = dot(grad(x), nu) + lam * v(x);
      load[e.a] += len * q.w * (1.0 - q.s) * f;
      load[e.b] += len * q.w * q.s * f;
    }
  }
  return load;
}

FEField ImpenetrableModel::reflected(const ScalarFn& v, const GradFn& grad) const {
  const auto n = static_cast<Eigen::Index>(mesh_->nodes.size());
  if (!has_obstacle()) return {mesh_, CVector::Zero(n)};
  const CVector load = robin_load(v, grad);
  return {mesh_, problem_->solve(CVector::Zero(n), &load)};
}

RepresentationTerms ImpenetrableModel::representation(const ScalarFn& v, const GradFn& grad) const {
  const Mesh& mesh = *mesh_;
  const FEField w = reflected(v, grad);
  RepresentationTerms t;
  CVector conj_v(static_cast<Eigen::Index>(mesh.nodes.size()));
  for (size_t i = 0; i < mesh.nodes.size(); ++i) conj_v[static_cast<Eigen::Index>(i)] = std::conj(v(mesh.nodes[i]));
  const CVector eta = boundary_lifting(mesh, conj_v);
  // <dw/dnu, f> = eta^T A w since the Robin load lives on OBSTACLE nodes only
  const cplx pair_w = (eta.transpose() * (problem_->matrix() * w.coeffs))(0);
  t.lhs = -pair_w.real();
  t.scale = abs_form(problem_->matrix(), eta, w.coeffs);
  if (!has_obstacle()) return t;

  for (const BoundaryEdge& e : mesh.boundary_edges) {
    if (e.marker != Marker::kObstacle) continue;
    const Vec2 pa = mesh.nodes[static_cast<size_t>(e.a)], pb = mesh.nodes[static_cast<size_t>(e.b)];
    const double len = norm(pb - pa);
    const Vec2 nu = perp(pb - pa) / len;
    for (const auto& q : quad::kLine4) {
      const Vec2 x = pa + q.s * (pb - pa);
      const double wt = len * q.w;
      const cplx lam = (1.0 - q.s) * lambda_.lambda[e.a] + q.s * lambda_.lambda[e.b];
      const cplx wx = (1.0 - q.s) * w.coeffs[e.a] + q.s * w.coeffs[e.b];
      const cplx vx = v(x);
      t.im_lambda_cross += -2.0 * wt * lam.imag() * (wx * std::conj(vx)).imag();
      t.re_lambda_w += -wt * lam.real() * std::norm(wx);
      t.re_lambda_v += wt * lam.real() * std::norm(vx);
      // int_D |grad v|^2 - k^2 |v|^2 = Re int_dD conj(v) dv/dn for Helmholtz fields
      t.interior_v += wt * (std::conj(vx) * dot(grad(x), nu)).real();
    }
  }
  const double gw = h1_seminorm(mesh, w.coeffs);
  const double lw = l2_norm(mesh, w.coeffs);
  t.grad_w = gw * gw;
  t.v0_w = -k_ * k_ * lw * lw;
  return t;
}

IndicatorSample ImpenetrableModel::indicator(const Direction& dir, double tau) const {
  const CGOField f = make_exp_cgo(dir, tau, k_);
  const double shift = max_projection(*mesh_, dir.omega());
  const RepresentationTerms t = representation([&](Vec2 x) { return f.value_scaled(x, shift); },
                                               [&](Vec2 x) { return f.gradient_scaled(x, shift); });
  // the representation side only pairs w with v on dD and over Omega \ D, so it avoids the
  // flux of w on OUTER where the growing exponential amplifies discretization error
  return make_sample(tau, cplx(t.rhs(), 0.0), shift, t.term_scale());
}

double ImpenetrableModel::check_probe_point(Vec2 y) const {
  const Mesh& mesh = *mesh_;
  double diam = -1.0;
  for (size_t t = 0; t < mesh.triangles.size() && diam < 0.0; ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec2 a = mesh.nodes[static_cast<size_t>(tri[0])], b = mesh.nodes[static_cast<size_t>(tri[1])],
               c = mesh.nodes[static_cast<size_t>(tri[2])];
    const double tol = -1e-12 * std::abs(signed_area(a, b, c));
    if (signed_area(a, b, y) >= tol && signed_area(b, c, y) >= tol && signed_area(c, a, y) >= tol) {
      diam = std::max({norm(b - a), norm(c - b), norm(a - c)});
    }
  }
  if (diam < 0.0) throw SourceTooClose(fmt::format("probe point ({}, {}) is not in the exterior mesh", y.x, y.y));
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    const double d = point_segment_distance(y, mesh.nodes[static_cast<size_t>(e.a)], mesh.nodes[static_cast<size_t>(e.b)]);
    if (d <= diam) {
      throw SourceTooClose(fmt::format("probe point ({}, {}) is {:.3g} from the {} boundary, element diameter {:.3g}", y.x,
                                       y.y, d, e.marker == Marker::kObstacle ? "obstacle" : "outer", diam));
    }
  }
  return diam;
}

double ImpenetrableModel::probe(Vec2 y) const {
  if (!(k_ > 0.0)) throw InvalidArgument("probe indicator needs k > 0");
  check_probe_point(y);
  if (!has_obstacle()) return 0.0;
  const double k = k_;
  const RepresentationTerms t = representation([&](Vec2 x) { return helmholtz_green(x, y, k); },
                                               [&](Vec2 x) { return helmholtz_green_grad(x, y, k); });
  return t.rhs();
}

std::pair<double, double> ImpenetrableModel::interior_norms(const ScalarFn& v, const GradFn& grad) const {
  if (!has_obstacle()) return {0.0, 0.0};
  const double a = polygon_integral(hole_, [&](Vec2 x) {
    const CVec2 g = grad(x);
    return std::norm(g.x) + std::norm(g.y);
  });
  const double b = polygon_integral(hole_, [&](Vec2 x) { return std::norm(v(x)); });
  return {a, b};
}

IndicatorSeries enclosure_impenetrable(const ImpenetrableModel& model, const Direction& dir,
                                       std::span<const double> taus) {
  check_taus(taus);
  IndicatorSeries s;
  s.direction = dir;
  s.pipeline = Pipeline::kImpenetrable;
  for (double tau : taus) s.samples.push_back(model.indicator(dir, tau));
  s.validate();
  return s;
}

RepresentationTerms representation_check(const ImpenetrableModel& model, const ScalarFn& v, const GradFn& grad) {
  return model.representation(v, grad);
}

double probe_indicator(const ImpenetrableModel& model, Vec2 y) { return model.probe(y); }

std::vector<ProbeField> plane_wave_family(double k, int count) {
  if (!(k > 0.0)) throw InvalidArgument("plane waves need k > 0");
  std::vector<ProbeField> out;
  for (const Direction& d : uniform_directions(count)) {
    const Vec2 w = d.omega();
    out.push_back({fmt::format("plane_wave_{:.6f}", d.angle()),
                   [=](Vec2 x) { return std::exp(kI * k * dot(x, w)); },
                   [=](Vec2 x) {
                     const cplx e = kI * k * std::exp(kI * k * dot(x, w));
                     return CVec2{e * w.x, e * w.y};
                   }});
  }
  return out;
}

std::vector<ProbeField> cgo_family(const Direction& dir, std::span<const double> taus, double k, double shift) {
  std::vector<ProbeField> out;
  for (double tau : taus) {
    const CGOField f = make_exp_cgo(dir, tau, k);
    out.push_back({fmt::format("cgo_tau_{}", tau), [=](Vec2 x) { return f.value_scaled(x, shift); },
                   [=](Vec2 x) { return f.gradient_scaled(x, shift); }});
  }
  return out;
}

InequalityReport inequality_check(const ImpenetrableModel& model, const std::vector<ProbeField>& family,
                                  double c2_cap) {
  if (!(c2_cap >= 0.0)) throw InvalidArgument("C2 cap must be >= 0");
  InequalityReport r;
  r.c2_cap = c2_cap;
  for (const ProbeField& f : family) {
    const auto [a, b] = model.interior_norms(f.value, f.gradient);
    if (!(b > 0.0)) {
      ++r.excluded;
      continue;
    }
    InequalityRow row;
    row.label = f.label;
    row.m = model.representation(f.value, f.gradient).rhs();
    row.a = a;
    row.b = b;
    row.c = a + b;
    r.sup_m_over_c = std::max(r.sup_m_over_c, row.m / row.c);
    r.rows.push_back(row);
  }
  if (r.rows.empty()) throw EmptyFamily("no family member has a nonzero L2 norm on D");

  // m >= C1 a - C2 b is easiest at the largest C2, so C1 is fixed there.
  double c1 = 1.0;
  bool ok = true;
  for (const auto& row : r.rows) {
    if (row.a > 0.0) {
      c1 = std::min(c1, (row.m + c2_cap * row.b) / row.a);
    } else if (row.m + c2_cap * row.b < 0.0) {
      ok = false;
    }
  }
  r.c1 = c1;
  r.feasible = ok && c1 > 0.0;
  if (r.feasible) {
    double c2 = 0.0;
    for (const auto& row : r.rows) c2 = std::max(c2, (0.5 * c1 * row.a - row.m) / row.b);
    r.c2 = c2;
  }
  return r;
}

}  // namespace enclab
