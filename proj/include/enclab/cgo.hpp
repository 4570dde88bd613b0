#pragma once

#include <functional>
#include <vector>

#include "enclab/common.hpp"
#include "enclab/fem.hpp"
#include "enclab/geometry.hpp"
#include "enclab/mesh.hpp"

namespace enclab {

/// Frequency z of an exponential probe e^{x.z}, with z.z = -k2.
struct SpectralParam {
  Direction direction;
  double tau = 0.0;
  cplx k2 = 0.0;
  cplx zeta = 0.0;  // coefficient of i theta in z
  CVec2 z;

  /// z = tau omega + i sqrt(tau^2 + k^2) theta. Throws InvalidArgument unless tau > 0, k >= 0.
  static SpectralParam exponential(const Direction& dir, double tau, double k);
  /// Constant, possibly complex V0: z = tau omega + i zeta theta, zeta = sqrt(tau^2 + V0)
  /// on the principal branch, so z.z = -V0.
  static SpectralParam for_constant(const Direction& dir, double tau, cplx v0);
  /// Partner frequency tau omega - i zeta theta. Equals conj(z) when k2 is real.
  SpectralParam conjugate() const;

  /// sqrt(Re k2); meaningful for the real case.
  double k() const;
};

/// Uniform node grid over a rectangle: (nx + 1) x (ny + 1) nodes, index i + (nx + 1) j.
struct CgoGrid {
  Vec2 lo;
  double h = 0.0;
  int nx = 0;
  int ny = 0;

  size_t size() const { return static_cast<size_t>(nx + 1) * static_cast<size_t>(ny + 1); }
  size_t index(int i, int j) const { return static_cast<size_t>(i) + static_cast<size_t>(nx + 1) * static_cast<size_t>(j); }
  Vec2 point(int i, int j) const { return {lo.x + i * h, lo.y + j * h}; }
  bool empty() const { return nx == 0 || ny == 0; }
};

/// V0 sampled on a grid covering Omega; zero outside.
struct PotentialGrid {
  CgoGrid grid;
  std::vector<cplx> values;

  /// `n` intervals across the width of `omega`; the height must be a whole number of steps.
  static PotentialGrid sample(const BoundingBox& omega, int n, const std::function<cplx(Vec2)>& v0);
  bool is_real(double tol = 0.0) const;
};

/// v(x) = e^{x.z} (1 + Psi(x)). Psi is empty for the closed-form family.
struct CGOField {
  SpectralParam param;
  CgoGrid grid;
  std::vector<cplx> psi;
  double sup_psi = 0.0;
  int iterations = 0;
  double contraction = 0.0;  // last ratio of successive Born update norms

  bool closed_form() const { return psi.empty(); }
  /// Bilinear interpolation of Psi, clamped to the grid.
  cplx psi_at(Vec2 x) const;
  cplx value(Vec2 x) const;
  /// e^{x.z - tau shift} (1 + Psi(x)).
  cplx value_scaled(Vec2 x, double shift) const;
  /// Gradient of value_scaled; Psi contributes through its bilinear interpolant.
  CVec2 gradient_scaled(Vec2 x, double shift) const;
};

struct FaddeevOptions {
  int max_iterations = 200;
  double tolerance = 1e-9;
};

/// Closed form with Psi = 0; solves Delta v + k^2 v = 0 exactly.
CGOField make_exp_cgo(const Direction& dir, double tau, double k);
/// Closed form for constant complex V0.
CGOField make_exp_cgo(const Direction& dir, double tau, cplx v0);

/// Born iteration for Psi = G_z * (V0 (1 + Psi)), z = tau (omega + i theta), on a periodic
/// box of at least twice the diameter of the grid, same step, V0 zero-padded. G_z has
/// symbol 1/(|xi|^2 - 2i z.xi) evaluated on half-integer frequencies.
/// Throws BornDiverged with the observed contraction factor.
CGOField solve_faddeev(const PotentialGrid& v0, const Direction& dir, double tau, const FaddeevOptions& opt = {});
/// Same solver with an explicit frequency (z.z must vanish).
CGOField solve_faddeev(const PotentialGrid& v0, const SpectralParam& param, const FaddeevOptions& opt = {});

/// The partner field v*(x) = v(x, z*) for the same V0.
CGOField conjugate_cgo(const PotentialGrid& v0, const CGOField& field, const FaddeevOptions& opt = {});

/// ||Delta_h v + V0 v|| / ||v|| over grid nodes at least 4 steps inside, with the exponential
/// factored out and 8th-order central differences applied to Psi. Closed-form fields are
/// evaluated on `v0.grid`.
double cgo_residual(const CGOField& field, const PotentialGrid& v0);

/// Side length of the periodic box solve_faddeev uses for `grid`.
int faddeev_box_size(const CgoGrid& grid);

/// value_scaled at every mesh node.
CVector sample_scaled(const CGOField& field, const Mesh& mesh, double shift);
/// max over mesh nodes of x.omega.
double max_projection(const Mesh& mesh, Vec2 omega);

/// Frequency z_h with Re z_h = Re z for which the nodal values of e^{x.z_h} lie in the kernel
/// of K - M_{k2} at every interior node of a uniform hx x hy mesh (uniform_steps pattern).
/// Newton on Im z_h from Im z; throws NoConvergence when the discrete relation has no root
/// near the continuum one (large tau h).
CVec2 discrete_frequency(const SpectralParam& param, double hx, double hy);

/// Nodal values e^{x.z - tau shift} for a given frequency.
CVector sample_exponential(const Mesh& mesh, CVec2 z, double tau, double shift);

}  // namespace enclab
