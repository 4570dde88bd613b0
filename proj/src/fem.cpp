#include "enclab/fem.hpp"

#include <algorithm>
#include <cmath>

#include "enclab/errors.hpp"
#include "enclab/kernels.hpp"
#include "enclab/quadrature.hpp"

namespace enclab {

namespace {

bool all_finite(const CVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) return false;
  }
  return true;
}

void require_size(const CVector& v, size_t n, const char* what) {
  if (static_cast<size_t>(v.size()) != n) {
    throw MeshMismatch(std::string(what) + " has " + std::to_string(v.size()) + " entries for a mesh with " +
                       std::to_string(n) + " nodes");
  }
}

SpMat scatter(const Mesh& mesh, const std::vector<kernels::LocalMatrix>& local) {
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(9 * local.size());
  // Serial scatter in element order keeps the summation order fixed.
  for (size_t t = 0; t < local.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], local[t][3 * i + j]);
  }
  const auto n = static_cast<Eigen::Index>(mesh.nodes.size());
  SpMat A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

std::array<Vec2, 3> gradients(const Mesh& mesh, size_t t, double* area_out) {
  const auto& tri = mesh.triangles[t];
  const Vec2 p[3] = {mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]};
  const double area = signed_area(p[0], p[1], p[2]);
  std::array<Vec2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Vec2 e = p[(i + 2) % 3] - p[(i + 1) % 3];
    g[i] = Vec2{-e.y, e.x} / (2.0 * area);
  }
  *area_out = area;
  return g;
}

}  // namespace

// ---------------------------------------------------------------- data types

void FEField::validate() const {
  if (!mesh) throw InvariantViolation("field has no mesh");
  if (static_cast<size_t>(coeffs.size()) != mesh->nodes.size()) throw InvariantViolation("field size mismatch");
  if (!all_finite(coeffs)) throw InvariantViolation("field has non-finite values");
}

PotentialField PotentialField::make(CVector V0, CVector V) {
  PotentialField p;
  p.mask.resize(static_cast<size_t>(V.size()));
  for (Eigen::Index i = 0; i < V.size(); ++i) p.mask[static_cast<size_t>(i)] = V[i] != cplx(0.0) ? 1 : 0;
  p.V0 = std::move(V0);
  p.V = std::move(V);
  return p;
}

PotentialField PotentialField::constant(size_t n_nodes, cplx V0) {
  const auto n = static_cast<Eigen::Index>(n_nodes);
  return make(CVector::Constant(n, V0), CVector::Zero(n));
}

void PotentialField::validate(size_t n_nodes, bool require_real_v0) const {
  if (static_cast<size_t>(V0.size()) != n_nodes || static_cast<size_t>(V.size()) != n_nodes ||
      mask.size() != n_nodes) {
    throw InvariantViolation("potential sizes do not match the mesh");
  }
  if (!all_finite(V0) || !all_finite(V)) throw InvariantViolation("potential has non-finite values");
  for (size_t i = 0; i < n_nodes; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (!mask[i] && V[ii] != cplx(0.0)) throw InvariantViolation("V is nonzero outside its mask");
    if (require_real_v0 && !mask[i] && V0[ii].imag() != 0.0) {
      throw InvariantViolation("Im V0 must vanish off the obstacle for the impenetrable pipeline");
    }
  }
}

Impedance Impedance::constant(size_t n_nodes, cplx value) {
  return {CVector::Constant(static_cast<Eigen::Index>(n_nodes), value)};
}

CVector interpolate(const Mesh& mesh, const ScalarFn& f) {
  CVector out(static_cast<Eigen::Index>(mesh.nodes.size()));
  for (size_t i = 0; i < mesh.nodes.size(); ++i) out[static_cast<Eigen::Index>(i)] = f(mesh.nodes[i]);
  return out;
}

// ---------------------------------------------------------------- assembly

SpMat assemble_helmholtz(const Mesh& mesh, const CVector& c) {
  require_size(c, mesh.nodes.size(), "coefficient");
  return scatter(mesh, kernels::element_matrices(mesh, {c.data(), static_cast<size_t>(c.size())}));
}

SpMat assemble_helmholtz_serial(const Mesh& mesh, const CVector& c) {
  require_size(c, mesh.nodes.size(), "coefficient");
  return scatter(mesh, kernels::serial::element_matrices(mesh, {c.data(), static_cast<size_t>(c.size())}));
}

SpMat assemble_mass(const Mesh& mesh, const CVector& c) {
  // K - M_c - (K - M_0) = -M_c
  return assemble_helmholtz(mesh, CVector::Zero(c.size())) - assemble_helmholtz(mesh, c);
}

SpMat assemble_edge_mass(const Mesh& mesh, const CVector& lambda, Marker marker) {
  require_size(lambda, mesh.nodes.size(), "impedance");
  std::vector<Eigen::Triplet<cplx>> trip;
  for (const auto& e : mesh.boundary_edges) {
    if (e.marker != marker) continue;
    const double len = norm(mesh.nodes[e.b] - mesh.nodes[e.a]);
    const cplx la = lambda[e.a], lb = lambda[e.b];
    trip.emplace_back(e.a, e.a, len * (la / 4.0 + lb / 12.0));
    trip.emplace_back(e.b, e.b, len * (lb / 4.0 + la / 12.0));
    trip.emplace_back(e.a, e.b, len * (la + lb) / 12.0);
    trip.emplace_back(e.b, e.a, len * (la + lb) / 12.0);
  }
  const auto n = static_cast<Eigen::Index>(mesh.nodes.size());
  SpMat B(n, n);
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

// ---------------------------------------------------------------- linear problem

LinearProblem::LinearProblem(std::shared_ptr<const Mesh> mesh, SpMat A, std::vector<int> dirichlet)
    : mesh_(std::move(mesh)), A_(std::move(A)), fixed_(std::move(dirichlet)) {
  const auto n = static_cast<int>(mesh_->nodes.size());
  if (A_.rows() != n || A_.cols() != n) throw MeshMismatch("system matrix does not match the mesh");
  std::sort(fixed_.begin(), fixed_.end());
  fixed_.erase(std::unique(fixed_.begin(), fixed_.end()), fixed_.end());
  std::vector<int> pos(static_cast<size_t>(n), -1);
  for (size_t i = 0; i < fixed_.size(); ++i) pos[static_cast<size_t>(fixed_[i])] = -2 - static_cast<int>(i);
  for (int i = 0; i < n; ++i) {
    if (pos[static_cast<size_t>(i)] == -1) {
      pos[static_cast<size_t>(i)] = static_cast<int>(free_.size());
      free_.push_back(i);
    }
  }
  if (free_.empty()) throw SingularSystem("no free unknowns");
  std::vector<Eigen::Triplet<cplx>> tff, tfb;
  for (int col = 0; col < A_.outerSize(); ++col) {
    for (SpMat::InnerIterator it(A_, col); it; ++it) {
      const int pr = pos[static_cast<size_t>(it.row())];
      const int pc = pos[static_cast<size_t>(it.col())];
      if (pr < 0) continue;
      if (pc >= 0) {
        tff.emplace_back(pr, pc, it.value());
      } else {
        tfb.emplace_back(pr, -2 - pc, it.value());
      }
    }
  }
  const auto nf = static_cast<Eigen::Index>(free_.size());
  A_ff_.resize(nf, nf);
  A_ff_.setFromTriplets(tff.begin(), tff.end());
  A_fb_.resize(nf, static_cast<Eigen::Index>(fixed_.size()));
  A_fb_.setFromTriplets(tfb.begin(), tfb.end());
  A_ff_.makeCompressed();
  // Scale of the full operator; the free block alone can be tiny when it is singular.
  for (int col = 0; col < A_.outerSize(); ++col)
    for (SpMat::InnerIterator it(A_, col); it; ++it) norm_ff_ = std::max(norm_ff_, std::abs(it.value()));

  lu_ = std::make_shared<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>>();
  lu_->analyzePattern(A_ff_);
  lu_->factorize(A_ff_);
  if (lu_->info() != Eigen::Success) throw SingularSystem("sparse LU factorization failed: " + lu_->lastErrorMessage());
  // Probe solve: a huge response to a unit load means a (numerically) zero pivot.
  const CVector probe = CVector::Ones(nf);
  const CVector x = lu_->solve(probe);
  if (!all_finite(x) || x.cwiseAbs().maxCoeff() * norm_ff_ > 1e14) {
    throw SingularSystem("system is numerically singular (probe solve amplification exceeds 1e14)");
  }
}

CVector LinearProblem::solve(const CVector& boundary, const CVector* load) const {
  const auto n = static_cast<Eigen::Index>(mesh_->nodes.size());
  if (boundary.size() != n || (load != nullptr && load->size() != n)) {
    throw MeshMismatch("boundary data or load does not match the mesh");
  }
  CVector gb(static_cast<Eigen::Index>(fixed_.size()));
  for (size_t i = 0; i < fixed_.size(); ++i) gb[static_cast<Eigen::Index>(i)] = boundary[fixed_[i]];
  CVector rhs(static_cast<Eigen::Index>(free_.size()));
  for (size_t i = 0; i < free_.size(); ++i) {
    rhs[static_cast<Eigen::Index>(i)] = load != nullptr ? (*load)[free_[i]] : cplx(0.0);
  }
  if (gb.size() > 0) rhs -= A_fb_ * gb;

  CVector xf = CVector::Zero(rhs.size());
  const double rhs_norm = rhs.cwiseAbs().maxCoeff();
  if (rhs_norm > 0.0) {
    xf = lu_->solve(rhs);
    // Iterative refinement against the stored matrix.
    for (int it = 0; it < 3; ++it) {
      const CVector r = rhs - A_ff_ * xf;
      const double scale = std::max(rhs_norm, norm_ff_ * xf.cwiseAbs().maxCoeff());
      if (!all_finite(r)) break;
      if (r.cwiseAbs().maxCoeff() <= 1e-13 * scale) break;
      xf += lu_->solve(r);
    }
    if (!all_finite(xf)) throw SingularSystem("solution is not finite");
    const CVector r = rhs - A_ff_ * xf;
    const double xn = xf.cwiseAbs().maxCoeff();
    const double scale = std::max(rhs_norm, norm_ff_ * xn);
    if (r.cwiseAbs().maxCoeff() > 1e-8 * scale) throw SingularSystem("residual too large after solve");
    if (xn * norm_ff_ / rhs_norm > 1e14) throw SingularSystem("system is numerically singular");
  }
  CVector x(n);
  for (size_t i = 0; i < fixed_.size(); ++i) x[fixed_[i]] = gb[static_cast<Eigen::Index>(i)];
  for (size_t i = 0; i < free_.size(); ++i) x[free_[i]] = xf[static_cast<Eigen::Index>(i)];
  return x;
}

double LinearProblem::residual(const CVector& x, const CVector* load) const {
  const CVector ax = A_ * x;
  double worst = 0.0, scale = 0.0;
  for (int i : free_) {
    const cplx li = load != nullptr ? (*load)[i] : cplx(0.0);
    worst = std::max(worst, std::abs(ax[i] - li));
    scale = std::max(scale, std::abs(li));
  }
  scale = std::max(scale, norm_ff_ * x.cwiseAbs().maxCoeff());
  return scale > 0.0 ? worst / scale : worst;
}

LinearProblem dirichlet_problem(std::shared_ptr<const Mesh> mesh, const PotentialField& pot) {
  if (mesh->has_marker(Marker::kObstacle)) throw MeshMismatch("Dirichlet problem expects a mesh without an obstacle");
  pot.validate(mesh->nodes.size());
  SpMat A = assemble_helmholtz(*mesh, pot.total());
  auto fixed = mesh->boundary_nodes(Marker::kOuter);
  return LinearProblem(std::move(mesh), std::move(A), std::move(fixed));
}

FEField solve_dirichlet(std::shared_ptr<const Mesh> mesh, const PotentialField& pot, const CVector& g) {
  const LinearProblem p = dirichlet_problem(mesh, pot);
  return {mesh, p.solve(g)};
}

LinearProblem impedance_problem(std::shared_ptr<const Mesh> mesh, const CVector& V0, const Impedance& lambda) {
  require_size(V0, mesh->nodes.size(), "V0");
  require_size(lambda.lambda, mesh->nodes.size(), "impedance");
  if (!all_finite(lambda.lambda)) throw InvariantViolation("impedance has non-finite values");
  SpMat A = assemble_helmholtz(*mesh, V0) - assemble_edge_mass(*mesh, lambda.lambda, Marker::kObstacle);
  auto fixed = mesh->boundary_nodes(Marker::kOuter);
  return LinearProblem(std::move(mesh), std::move(A), std::move(fixed));
}

FEField solve_impedance(std::shared_ptr<const Mesh> mesh, const CVector& V0, const Impedance& lambda,
                        const CVector& g) {
  const LinearProblem p = impedance_problem(mesh, V0, lambda);
  return {mesh, p.solve(g)};
}

// ---------------------------------------------------------------- functionals

CVector boundary_lifting(const Mesh& mesh, const CVector& f) {
  require_size(f, mesh.nodes.size(), "boundary data");
  CVector eta = CVector::Zero(f.size());
  for (int i : mesh.boundary_nodes(Marker::kOuter)) eta[i] = f[i];
  return eta;
}

cplx neumann_pairing_lifted(const FEField& u, const PotentialField& pot, const CVector& eta, const Impedance* lambda) {
  if (!u.mesh) throw MeshMismatch("field has no mesh");
  const Mesh& mesh = *u.mesh;
  require_size(u.coeffs, mesh.nodes.size(), "field");
  require_size(eta, mesh.nodes.size(), "lifting");
  pot.validate(mesh.nodes.size());
  SpMat A = assemble_helmholtz(mesh, pot.total());
  if (lambda != nullptr) {
    require_size(lambda->lambda, mesh.nodes.size(), "impedance");
    A -= assemble_edge_mass(mesh, lambda->lambda, Marker::kObstacle);
  }
  return eta.transpose() * (A * u.coeffs);
}

cplx neumann_pairing(const FEField& u, const PotentialField& pot, const CVector& f, const Impedance* lambda) {
  if (!u.mesh) throw MeshMismatch("field has no mesh");
  return neumann_pairing_lifted(u, pot, boundary_lifting(*u.mesh, f), lambda);
}

double galerkin_residual(const LinearProblem& problem, const FEField& u) {
  const CVector au = problem.matrix() * u.coeffs;
  double worst = 0.0;
  for (int i : problem.free_nodes()) worst = std::max(worst, std::abs(au[i]));
  return worst;
}

// ---------------------------------------------------------------- norms

double l2_norm(const Mesh& mesh, const CVector& u) {
  require_size(u, mesh.nodes.size(), "field");
  double s = 0.0;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const cplx a = u[tri[0]], b = u[tri[1]], c = u[tri[2]];
    // P1 mass matrix is (area/12)(I + 1 1^T).
    s += mesh.triangle_area(static_cast<int>(t)) / 12.0 * (std::norm(a) + std::norm(b) + std::norm(c) + std::norm(a + b + c));
  }
  return std::sqrt(s);
}

double l2_norm(const FEField& u) { return l2_norm(*u.mesh, u.coeffs); }

double h1_seminorm(const Mesh& mesh, const CVector& u) {
  require_size(u, mesh.nodes.size(), "field");
  double s = 0.0;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    double area;
    const auto g = gradients(mesh, t, &area);
    const auto& tri = mesh.triangles[t];
    cplx gx = 0.0, gy = 0.0;
    for (int i = 0; i < 3; ++i) {
      gx += u[tri[i]] * g[i].x;
      gy += u[tri[i]] * g[i].y;
    }
    s += area * (std::norm(gx) + std::norm(gy));
  }
  return std::sqrt(s);
}

double l1_norm_product(const Mesh& mesh, const CVector& c, const CVector& u) {
  require_size(c, mesh.nodes.size(), "coefficient");
  require_size(u, mesh.nodes.size(), "field");
  double s = 0.0;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double area = mesh.triangle_area(static_cast<int>(t));
    for (const auto& q : quad::kTriangle6) {
      const cplx cq = q.l0 * c[tri[0]] + q.l1 * c[tri[1]] + q.l2 * c[tri[2]];
      const cplx uq = q.l0 * u[tri[0]] + q.l1 * u[tri[1]] + q.l2 * u[tri[2]];
      s += area * q.w * std::abs(cq * uq);
    }
  }
  return s;
}

double l2_error(const Mesh& mesh, const CVector& u, const ScalarFn& exact) {
  require_size(u, mesh.nodes.size(), "field");
  double s = 0.0;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec2 a = mesh.nodes[tri[0]], b = mesh.nodes[tri[1]], c = mesh.nodes[tri[2]];
    const double area = signed_area(a, b, c);
    for (const auto& q : quad::kTriangle6) {
      const cplx uq = q.l0 * u[tri[0]] + q.l1 * u[tri[1]] + q.l2 * u[tri[2]];
      s += area * q.w * std::norm(uq - exact(quad::tri_point(q, a, b, c)));
    }
  }
  return std::sqrt(s);
}

double polygon_integral(std::span<const Vec2> polygon, const std::function<double(Vec2)>& f, int sub) {
  if (polygon.size() < 3) return 0.0;
  if (sub < 1) throw InvalidArgument("subdivision must be positive");
  Vec2 centroid{0, 0};
  for (const Vec2& p : polygon) centroid += p;
  centroid = centroid / static_cast<double>(polygon.size());
  auto tri_integral = [&](Vec2 a, Vec2 b, Vec2 c) {
    const double area = signed_area(a, b, c);
    double s = 0.0;
    for (const auto& q : quad::kTriangle6) s += q.w * f(quad::tri_point(q, a, b, c));
    return area * s;
  };
  double total = 0.0;
  for (size_t e = 0; e < polygon.size(); ++e) {
    const Vec2 a = centroid, b = polygon[e], c = polygon[(e + 1) % polygon.size()];
    auto P = [&](int i, int j) { return a + (b - a) * (static_cast<double>(i) / sub) + (c - a) * (static_cast<double>(j) / sub); };
    for (int i = 0; i < sub; ++i) {
      for (int j = 0; i + j < sub; ++j) {
        total += tri_integral(P(i, j), P(i + 1, j), P(i, j + 1));
        if (i + j < sub - 1) total += tri_integral(P(i + 1, j), P(i + 1, j + 1), P(i, j + 1));
      }
    }
  }
  return total;
}

ReflectedRatios reflected_ratio_impenetrable(const FEField& w, std::span<const Vec2> hole_polygon, const ScalarFn& v) {
  ReflectedRatios r;
  r.numerator = l2_norm(w);
  r.denominator = std::sqrt(polygon_integral(hole_polygon, [&](Vec2 x) { return std::norm(v(x)); }));
  if (!(r.denominator > 0.0)) throw ZeroDenominator("v vanishes on D");
  r.ratio = r.numerator / r.denominator;
  return r;
}

ReflectedRatios reflected_ratio_penetrable(const FEField& w, const CVector& V, const CVector& v) {
  ReflectedRatios r;
  r.numerator = l2_norm(w);
  r.denominator = l1_norm_product(*w.mesh, V, v);
  if (!(r.denominator > 0.0)) throw ZeroDenominator("V v vanishes");
  r.ratio = r.numerator / r.denominator;
  return r;
}

}  // namespace enclab
