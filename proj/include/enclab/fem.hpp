#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "enclab/common.hpp"
#include "enclab/mesh.hpp"

namespace enclab {

using CVector = Eigen::VectorXcd;
using SpMat = Eigen::SparseMatrix<cplx>;
using ScalarFn = std::function<cplx(Vec2)>;
using GradFn = std::function<CVec2(Vec2)>;

/// P1 field: one complex coefficient per mesh node.
struct FEField {
  std::shared_ptr<const Mesh> mesh;
  CVector coeffs;

  /// Throws InvariantViolation on a size mismatch or non-finite values.
  void validate() const;
};

/// Nodal V0 and V with the support mask of V.
struct PotentialField {
  CVector V0;
  CVector V;
  std::vector<char> mask;  // V may be nonzero only where mask is set

  /// Mask taken as the nodes where V != 0.
  static PotentialField make(CVector V0, CVector V);
  /// V0 constant, V = 0.
  static PotentialField constant(size_t n_nodes, cplx V0);

  CVector total() const { return V0 + V; }
  /// Throws InvariantViolation unless sizes match `n_nodes`, values are finite, V vanishes
  /// off the mask and, when `require_real_v0`, Im V0 = 0 off the mask.
  void validate(size_t n_nodes, bool require_real_v0 = false) const;
};

/// Robin coefficient per node; only values at OBSTACLE nodes are used.
struct Impedance {
  CVector lambda;
  static Impedance constant(size_t n_nodes, cplx value);
};

/// Nodal interpolation.
CVector interpolate(const Mesh& mesh, const ScalarFn& f);

/// K - M_c for nodal coefficient c.
SpMat assemble_helmholtz(const Mesh& mesh, const CVector& c);
/// K - M_c computed with the serial element kernel.
SpMat assemble_helmholtz_serial(const Mesh& mesh, const CVector& c);
/// Weighted P1 mass matrix M_c.
SpMat assemble_mass(const Mesh& mesh, const CVector& c);
/// Edge mass on edges with `marker`: int_edge lambda phi_i phi_j, lambda linear on the edge.
SpMat assemble_edge_mass(const Mesh& mesh, const CVector& lambda, Marker marker);

/// Sparse system with Dirichlet rows eliminated: solves A x = load on the free nodes with
/// x fixed on `dirichlet`. The factorization is computed once and reused.
class LinearProblem {
 public:
  LinearProblem(std::shared_ptr<const Mesh> mesh, SpMat A, std::vector<int> dirichlet);

  /// `boundary` supplies the values at Dirichlet nodes (other entries ignored); `load`
  /// is the full right-hand side (free rows used). Throws SingularSystem.
  CVector solve(const CVector& boundary, const CVector* load = nullptr) const;

  const SpMat& matrix() const { return A_; }
  const std::shared_ptr<const Mesh>& mesh() const { return mesh_; }
  const std::vector<int>& free_nodes() const { return free_; }

  /// max over free rows |(A x - load)_i| relative to max(|load|, |A| |x|).
  double residual(const CVector& x, const CVector* load = nullptr) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  SpMat A_;
  std::vector<int> free_;
  std::vector<int> fixed_;
  SpMat A_ff_;
  SpMat A_fb_;
  double norm_ff_ = 0.0;
  std::shared_ptr<Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>> lu_;
};

/// Interior Dirichlet problem Delta u + (V0 + V) u = 0, u = g on the OUTER boundary.
LinearProblem dirichlet_problem(std::shared_ptr<const Mesh> mesh, const PotentialField& pot);
FEField solve_dirichlet(std::shared_ptr<const Mesh> mesh, const PotentialField& pot, const CVector& g);

/// Exterior impedance problem: Delta u + V0 u = 0 off D, du/dnu + lambda u = 0 on the
/// OBSTACLE boundary (nu pointing out of D), u = g on OUTER.
LinearProblem impedance_problem(std::shared_ptr<const Mesh> mesh, const CVector& V0, const Impedance& lambda);
FEField solve_impedance(std::shared_ptr<const Mesh> mesh, const CVector& V0, const Impedance& lambda,
                        const CVector& g);

/// <du/dnu on the outer boundary, f> through the volume form applied to the nodal lifting of f
/// (f at OUTER nodes, zero elsewhere):
///   int grad u . grad eta - int (V0 + V) u eta - int_{OBSTACLE} lambda u eta.
/// Bilinear (no conjugation). Throws MeshMismatch.
cplx neumann_pairing(const FEField& u, const PotentialField& pot, const CVector& f,
                     const Impedance* lambda = nullptr);
/// Same with an arbitrary lifting `eta` of f.
cplx neumann_pairing_lifted(const FEField& u, const PotentialField& pot, const CVector& eta,
                            const Impedance* lambda = nullptr);
/// The nodal boundary lifting used by neumann_pairing.
CVector boundary_lifting(const Mesh& mesh, const CVector& f);

/// Weak-form residual max_i |(A u)_i| over rows of non-Dirichlet nodes.
double galerkin_residual(const LinearProblem& problem, const FEField& u);

// ---- norms of P1 fields

double l2_norm(const FEField& u);
double l2_norm(const Mesh& mesh, const CVector& u);
double h1_seminorm(const Mesh& mesh, const CVector& u);
/// int |c u| with c, u interpolated linearly, 6-point rule per triangle.
double l1_norm_product(const Mesh& mesh, const CVector& c, const CVector& u);
/// L2 error against an exact function, 6-point rule per triangle.
double l2_error(const Mesh& mesh, const CVector& u, const ScalarFn& exact);

// ---- integrals over an obstacle polygon D_h with exact fields

/// Polygon given counterclockwise. Fan triangulation from the centroid, each fan triangle
/// split into `sub` x `sub` pieces, 6-point rule on each.
double polygon_integral(std::span<const Vec2> polygon, const std::function<double(Vec2)>& f, int sub = 16);

struct ReflectedRatios {
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
};

/// Impenetrable: ||u - v||_L2(Omega \ D) / ||v||_L2(D), with v exact on the hole polygon.
ReflectedRatios reflected_ratio_impenetrable(const FEField& w, std::span<const Vec2> hole_polygon,
                                             const ScalarFn& v);
/// Penetrable: ||u - v||_L2(Omega) / ||V v||_L1(Omega).
ReflectedRatios reflected_ratio_penetrable(const FEField& w, const CVector& V, const CVector& v);

}  // namespace enclab
