#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "enclab/cgo.hpp"
#include "enclab/fem.hpp"
#include "enclab/geometry.hpp"
#include "enclab/mesh.hpp"

namespace enclab {

enum class Pipeline { kPenetrable, kImpenetrable };
enum class Part { kRe, kIm, kAbs };

const char* to_string(Pipeline p);
const char* to_string(Part p);

/// One indicator value, kept as I e^{-2 tau shift} so large tau does not overflow.
struct IndicatorSample {
  double tau = 0.0;
  cplx scaled = 0.0;
  double shift = 0.0;
  double scale = 0.0;  // assembly magnitude, in the same units as `scaled`
  bool reliable = true;

  double log_abs() const;
  double arg() const { return std::arg(scaled); }
  /// log|part(I)|; -inf when the part is zero.
  double log_part(Part p) const;
  /// Sign of part(I): -1, 0 or +1.
  int sign_part(Part p) const;
  /// I itself; may overflow.
  cplx value() const;
};

/// |I| < kReliabilityFactor * eps * scale marks a sample unreliable.
inline constexpr double kReliabilityFactor = 1e3;
bool is_reliable(cplx scaled, double scale);

struct IndicatorSeries {
  Direction direction;
  double t_shift = 0.0;
  Pipeline pipeline = Pipeline::kPenetrable;
  std::vector<IndicatorSample> samples;

  /// Throws InvariantViolation unless tau is strictly increasing with at least 3 samples.
  void validate() const;
  std::vector<const IndicatorSample*> reliable() const;
};

/// Source of the probe fields v and v* for the penetrable pipeline.
struct CgoSource {
  enum class Kind { kExponential, kFaddeev };
  Kind kind = Kind::kExponential;
  cplx v0 = 0.0;                               // constant V0 (exponential family)
  std::shared_ptr<const PotentialGrid> grid;   // sampled V0 (Faddeev family)
  FaddeevOptions options;
  /// On a uniform diagonal-cut mesh, use exponentials that solve the discrete background
  /// equation exactly (same modulus, adjusted oscillation); otherwise nodal interpolation.
  bool discrete_probes = true;

  static CgoSource exponential(cplx v0);
  static CgoSource faddeev(std::shared_ptr<const PotentialGrid> grid, FaddeevOptions options = {});
};

/// Penetrable obstacle: Delta u + (V0 + V) u = 0 in Omega with V supported on D.
/// The two Dirichlet operators are factorized once and shared by every (direction, tau).
class PenetrableModel {
 public:
  PenetrableModel(std::shared_ptr<const Mesh> mesh, PotentialField potentials, CgoSource source);

  /// Both probe fields at the mesh nodes, scaled by e^{-tau shift}.
  struct Probes {
    CVector v;
    CVector v_star;
    double shift = 0.0;
  };
  Probes probes(const Direction& dir, double tau) const;

  /// <dv/dnu - du/dnu, v*> = -<dw/dnu, v*> through the volume form on the lifting of v*,
  /// with v_h the discrete background solution and w = u_h - v_h solved from its own
  /// equation (zero data on OUTER) so that the growing parts of v and u never cancel.
  IndicatorSample indicator(const Direction& dir, double tau) const;

  /// Volume path: int_D V v v* + int_D V w v*, w = u - v, with the discrete fields.
  struct VolumeTerms {
    IndicatorSample total;
    cplx first = 0.0;   // scaled like total.scaled
    cplx second = 0.0;
  };
  VolumeTerms volume_terms(const Direction& dir, double tau) const;

  /// w = u_h - v_h for the given boundary data.
  FEField reflected(const CVector& boundary) const;
  /// w from the background solution v_h.
  CVector reflected_coeffs(const CVector& vb) const;
  /// v_h for the given boundary data.
  FEField background(const CVector& boundary) const;

  const std::shared_ptr<const Mesh>& mesh() const { return mesh_; }
  const PotentialField& potentials() const { return pot_; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  PotentialField pot_;
  CgoSource source_;
  std::shared_ptr<LinearProblem> background_;
  std::shared_ptr<LinearProblem> perturbed_;
  SpMat mass_v_;
  std::optional<Vec2> steps_;  // set when discrete probes apply
};

IndicatorSeries enclosure_penetrable(const PenetrableModel& model, const Direction& dir, std::span<const double> taus);
/// Volume-integral evaluation of the same indicator.
IndicatorSample alessandrini_oracle(const PenetrableModel& model, const Direction& dir, double tau);

/// V0 = a0 + i b0 / k, V = (a - a0) + i (b - b0) / k at the mesh nodes; the mask is where
/// (a, b) differs from (a0, b0).
PotentialField absorbing_medium_potentials(const Mesh& mesh, double a0, double b0, const std::function<double(Vec2)>& a,
                                           const std::function<double(Vec2)>& b, double k);

/// Right-hand side terms of the representation formula for w = u - v.
struct RepresentationTerms {
  double lhs = 0.0;               // Re <dv/dnu - du/dnu, conj v>
  double im_lambda_cross = 0.0;   // -2 int_dD Im(lambda) Im(w conj v)
  double re_lambda_w = 0.0;       // -int_dD Re(lambda) |w|^2
  double grad_w = 0.0;            // int_{Omega\D} |grad w|^2
  double v0_w = 0.0;              // -int_{Omega\D} Re(V0) |w|^2
  double re_lambda_v = 0.0;       // int_dD Re(lambda) |v|^2
  double interior_v = 0.0;        // int_D |grad v|^2 - Re(V0) |v|^2
  double scale = 0.0;             // magnitude of the lhs assembly

  double rhs() const { return im_lambda_cross + re_lambda_w + grad_w + v0_w + re_lambda_v + interior_v; }
  /// Sum of the magnitudes of the rhs terms.
  double term_scale() const;
};

/// Impenetrable obstacle with Robin condition dv/dnu + lambda u = 0 on dD, V0 = k^2 outside D.
/// The mesh must carry OBSTACLE and OUTER boundaries; a mesh without OBSTACLE edges is the
/// obstacle-free case and gives w = 0.
class ImpenetrableModel {
 public:
  ImpenetrableModel(std::shared_ptr<const Mesh> mesh, double k, Impedance lambda);

  /// w = u - v, solved with zero data on OUTER and the Robin load
  /// int_dD (dv/dnu + lambda v) phi, nu pointing out of D. `v` and `grad` are exact fields
  /// solving Delta v + k^2 v = 0 near D.
  FEField reflected(const ScalarFn& v, const GradFn& grad) const;

  /// Representation terms for a given exact field; D integrals use the hole polygon.
  RepresentationTerms representation(const ScalarFn& v, const GradFn& grad) const;

  /// Re <dv/dnu - du/dnu, conj v> for the exponential field of (dir, tau, k), evaluated
  /// through the representation terms.
  IndicatorSample indicator(const Direction& dir, double tau) const;

  /// Probe indicator for the point source G_y. Throws SourceTooClose when y is within one
  /// local element diameter of dD or dOmega, or inside D.
  double probe(Vec2 y) const;

  /// ||grad v||^2 and ||v||^2 over the hole polygon.
  std::pair<double, double> interior_norms(const ScalarFn& v, const GradFn& grad) const;

  const std::shared_ptr<const Mesh>& mesh() const { return mesh_; }
  double k() const { return k_; }
  const std::vector<Vec2>& hole_polygon() const { return hole_; }
  bool has_obstacle() const { return !hole_.empty(); }

 private:
  CVector robin_load(const ScalarFn& v, const GradFn& grad) const;
  double check_probe_point(Vec2 y) const;

  std::shared_ptr<const Mesh> mesh_;
  double k_;
  Impedance lambda_;
  std::vector<Vec2> hole_;  // counterclockwise
  std::shared_ptr<LinearProblem> problem_;
};

IndicatorSeries enclosure_impenetrable(const ImpenetrableModel& model, const Direction& dir,
                                       std::span<const double> taus);
RepresentationTerms representation_check(const ImpenetrableModel& model, const ScalarFn& v, const GradFn& grad);
double probe_indicator(const ImpenetrableModel& model, Vec2 y);

/// Family member for the inequality check: an exact field with its gradient.
struct ProbeField {
  std::string label;
  ScalarFn value;
  GradFn gradient;
};

/// Plane waves e^{i k x.d} for `count` uniform directions d.
std::vector<ProbeField> plane_wave_family(double k, int count);
/// Exponential fields for the given direction and taus, scaled by e^{-tau shift}.
std::vector<ProbeField> cgo_family(const Direction& dir, std::span<const double> taus, double k, double shift);

struct InequalityRow {
  std::string label;
  double m = 0.0;  // middle term, from the representation side
  double a = 0.0;  // ||grad v||^2_D
  double b = 0.0;  // ||v||^2_D
  double c = 0.0;  // ||v||^2_{H1(D)}
};

struct InequalityReport {
  std::vector<InequalityRow> rows;
  size_t excluded = 0;      // members with b = 0
  double sup_m_over_c = 0.0;
  double c2_cap = 0.0;
  double c1 = 0.0;          // largest C1 in (0, 1] with m >= C1 a - C2 b for some C2 <= c2_cap
  double c2 = 0.0;          // smallest C2 that works with C1 / 2
  bool feasible = false;
};

/// Throws EmptyFamily when no member has b > 0.
InequalityReport inequality_check(const ImpenetrableModel& model, const std::vector<ProbeField>& family,
                                  double c2_cap);

}  // namespace enclab
