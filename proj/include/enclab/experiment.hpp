#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "enclab/cgo.hpp"
#include "enclab/geometry.hpp"
#include "enclab/indicator.hpp"
#include "enclab/reconstruct.hpp"

namespace enclab {

enum class PipelineKind { kPenetrable, kImpenetrable, kProbe, kGeometry, kCgo, kVerify };
const char* to_string(PipelineKind p);

/// (a0, b0) outside the obstacle and (a, b) inside, mapped through absorbing_medium_potentials.
struct AbsorbingSpec {
  double a0 = 1.0;
  double b0 = 0.0;
  double a = 1.0;
  double b = 0.0;
  double k = 1.0;
};

/// One physics variant of a run; [[case]] tables override the [physics] defaults.
struct PhysicsCase {
  std::string label;
  cplx v0 = 1.0;       // background potential (penetrable, Faddeev grid)
  cplx jump = 0.0;     // V on the obstacle (penetrable)
  cplx lambda = 0.0;   // Robin coefficient (impenetrable, probe)
  std::optional<AbsorbingSpec> absorbing;
  std::optional<Part> part;  // overrides the sweep part
};

/// A shape and direction for the geometry pipeline and the slice-regularity suites.
struct GeometryItem {
  std::string label;
  Shape shape = Shape::disk({0.0, 0.0}, 1.0);
  Direction direction;
};

struct ExperimentConfig {
  std::filesystem::path source;  // config file, empty when parsed from text
  PipelineKind pipeline = PipelineKind::kPenetrable;
  std::uint64_t seed = 0;

  BoundingBox domain{{-1.0, -1.0}, {1.0, 1.0}};
  std::optional<Shape> obstacle;
  double k = 1.0;
  std::vector<PhysicsCase> cases;  // at least one

  // mesh
  int n = 128;     // uniform intervals per side
  int n_r = 48;    // O-grid radial layers
  int n_t = 192;   // O-grid circumferential segments
  int refine = 2;  // refinement factor for the stability checks

  // sweep
  std::vector<double> taus;
  int directions = 16;
  double direction_offset = 0.0;
  bool random_offset = false;  // draw the offset from `seed`
  std::vector<double> t_grid;
  Part part = Part::kRe;

  // cgo
  CgoSource::Kind cgo_family = CgoSource::Kind::kExponential;
  int cgo_n = 256;
  FaddeevOptions faddeev;
  bool discrete_probes = true;
  double cgo_direction = 0.0;  // angle, cgo pipeline
  bool cgo_dump_fields = false;  // write Psi on the grid for every tau

  // probe
  int rays = 4;
  double ray_offset = 0.0;
  std::vector<double> distances;
  int probe_map = 0;  // points per side of an optional (x, y, I) map; 0 = off

  // geometry
  std::vector<GeometryItem> shapes;
  int slices = 64;
  double s_max_fraction = 0.25;  // s_max = fraction * width(D, omega) for the p fit

  // verify
  std::vector<std::string> suites;
  double two_path_tol = 1e-2;
  double representation_tol = 1e-2;
  int plane_waves = 8;
  int ineq_plane_waves = 16;
  std::vector<double> ineq_taus{4.0, 8.0, 12.0};
  double c2_cap = 10.0;
  double ineq_stability = 0.1;
  std::vector<double> lemma_taus{10.0, 20.0, 40.0};
  double bound_tau_max = 200.0;
  double bound_fraction = 0.5;
  double cgo_residual_tol = 1e-3;
  std::vector<double> reflected_taus{5.0, 10.0, 20.0};
  double reflected_spread = 2.0;
  std::vector<int> fem_grids{32, 64, 128};
  double fem_order = 1.9;

  /// Directions used by the sweep; with random_offset the offset is drawn from `seed`.
  std::vector<Direction> sweep_directions() const;
  Part part_for(const PhysicsCase& c) const { return c.part.value_or(part); }
  /// The obstacle, or ConfigError naming `obstacle` when absent.
  const Shape& require_obstacle() const;
};

/// Throws ConfigError with the offending key in the message.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::string_view toml_text, const std::filesystem::path& source = {});

/// One line of a verification report.
struct Check {
  std::string suite;
  std::string check;
  double measured = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct DirectionResult {
  IndicatorSeries series;
  SupportEstimate estimate;
  std::optional<double> t_star;  // when the t grid brackets a decay
};

struct CaseResult {
  std::string label;
  std::vector<DirectionResult> directions;
  std::optional<HullPolygon> hull;
};

struct ProbeRay {
  std::string case_label;
  Direction direction;
  std::vector<double> distances;  // distance of y to the obstacle boundary
  std::vector<Vec2> points;
  std::vector<double> values;
};

struct RunResult {
  PipelineKind pipeline = PipelineKind::kPenetrable;
  std::vector<CaseResult> cases;
  std::vector<ProbeRay> rays;
  std::vector<Check> checks;
  std::vector<std::filesystem::path> files;  // relative to the output directory
};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // no files when empty
  int jobs = 1;
  std::vector<std::string> suites;  // overrides the config's verify suites when nonempty
};

/// Runs the configured pipeline. With an output directory, writes the CSV artifacts and a
/// manifest.json listing each with its SHA-256. Artifacts are byte-identical across runs.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Suites: INEQ_1_20, REPRESENTATION, LEMMA_3_1, LEMMA_3_2, BOUND_3_8, CGO_RESIDUAL, TWO_PATH,
/// FEM_CONVERGENCE. Throws ConfigError for an unknown name.
std::vector<Check> run_suite(const ExperimentConfig& config, const std::string& suite, int jobs = 1);
const std::vector<std::string>& known_suites();

/// Meshes the configuration describes.
std::shared_ptr<const Mesh> uniform_mesh(const ExperimentConfig& config, int factor = 1);
std::shared_ptr<const Mesh> exterior_mesh(const ExperimentConfig& config, int factor = 1);

/// Potentials of a penetrable case on `mesh`.
PotentialField case_potentials(const ExperimentConfig& config, const PhysicsCase& c, const Mesh& mesh);
/// Background potential V0 the CGO probes are built for.
cplx case_background(const PhysicsCase& c);
/// V0 on the CGO grid: the case background on the obstacle when one is configured, on all of
/// the domain otherwise.
PotentialGrid cgo_potential(const ExperimentConfig& config, const PhysicsCase& c);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace enclab
