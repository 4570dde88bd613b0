#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

#include "enclab/errors.hpp"
#include "enclab/experiment.hpp"

namespace enclab {

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError(fmt::format("{}: {}", key, what));
}

std::string join(std::string_view where, std::string_view key) {
  return where.empty() ? std::string(key) : fmt::format("{}.{}", where, key);
}

void check_keys(const toml::table& t, std::string_view where, std::initializer_list<std::string_view> allowed) {
  for (auto&& [k, v] : t) {
    if (std::find(allowed.begin(), allowed.end(), k.str()) == allowed.end()) fail(join(where, k.str()), "unknown key");
  }
}

const toml::table& as_table(const toml::node& n, const std::string& key) {
  if (const auto* t = n.as_table()) return *t;
  fail(key, "expected a table");
}

double number(const toml::node& n, const std::string& key) {
  if (n.is_integer()) return static_cast<double>(n.as_integer()->get());
  if (n.is_floating_point()) {
    const double v = n.as_floating_point()->get();
    if (!std::isfinite(v)) fail(key, "must be finite");
    return v;
  }
  fail(key, "expected a number");
}

long long integer(const toml::node& n, const std::string& key, long long min) {
  if (!n.is_integer()) fail(key, "expected an integer");
  const long long v = n.as_integer()->get();
  if (v < min) fail(key, fmt::format("must be >= {}, got {}", min, v));
  return v;
}

bool boolean(const toml::node& n, const std::string& key) {
  if (!n.is_boolean()) fail(key, "expected true or false");
  return n.as_boolean()->get();
}

std::string string(const toml::node& n, const std::string& key) {
  if (!n.is_string()) fail(key, "expected a string");
  return n.as_string()->get();
}

/// A number, or [re, im].
cplx complex_value(const toml::node& n, const std::string& key) {
  if (const auto* a = n.as_array()) {
    if (a->size() != 2) fail(key, "expected a number or [re, im]");
    return {number(*a->get(0), key), number(*a->get(1), key)};
  }
  return number(n, key);
}

Vec2 point(const toml::node& n, const std::string& key) {
  const auto* a = n.as_array();
  if (!a || a->size() != 2) fail(key, "expected [x, y]");
  return {number(*a->get(0), key), number(*a->get(1), key)};
}

std::vector<double> numbers(const toml::node& n, const std::string& key) {
  const auto* a = n.as_array();
  if (!a) fail(key, "expected an array of numbers");
  std::vector<double> out;
  for (size_t i = 0; i < a->size(); ++i) out.push_back(number(*a->get(i), fmt::format("{}[{}]", key, i)));
  return out;
}

/// [v0, v1, ...] or {min, max, count, spacing = "linear" | "geometric"}.
std::vector<double> sweep(const toml::node& n, const std::string& key) {
  if (n.is_array()) return numbers(n, key);
  const toml::table& t = as_table(n, key);
  check_keys(t, key, {"min", "max", "count", "spacing"});
  if (!t.contains("min") || !t.contains("max") || !t.contains("count")) fail(key, "needs min, max and count");
  const double lo = number(*t.get("min"), key + ".min");
  const double hi = number(*t.get("max"), key + ".max");
  const auto count = static_cast<int>(integer(*t.get("count"), key + ".count", 1));
  const std::string spacing = t.contains("spacing") ? string(*t.get("spacing"), key + ".spacing") : "linear";
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    const double s = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    if (spacing == "linear") {
      out.push_back(lo + (hi - lo) * s);
    } else if (spacing == "geometric") {
      if (!(lo > 0.0) || !(hi > 0.0)) fail(key, "geometric spacing needs positive bounds");
      out.push_back(lo * std::pow(hi / lo, s));
    } else {
      fail(key + ".spacing", fmt::format("expected \"linear\" or \"geometric\", got \"{}\"", spacing));
    }
  }
  return out;
}

void require_increasing(const std::vector<double>& v, const std::string& key, bool positive) {
  for (size_t i = 0; i < v.size(); ++i) {
    if (positive && !(v[i] > 0.0)) fail(key, fmt::format("values must be positive, got {}", v[i]));
    if (i > 0 && !(v[i] > v[i - 1])) fail(key, fmt::format("values must be strictly increasing ({} after {})", v[i], v[i - 1]));
  }
}

Shape shape_from(const toml::table& t, const std::string& key, std::initializer_list<std::string_view> extra = {}) {
  std::vector<std::string_view> allowed{"shape", "center", "radius", "semi_a", "semi_b", "rotation", "vertices",
                                        "lo", "hi", "apex", "angle_lo", "angle_hi", "offset"};
  allowed.insert(allowed.end(), extra.begin(), extra.end());
  for (auto&& [k, v] : t) {
    if (std::find(allowed.begin(), allowed.end(), k.str()) == allowed.end()) fail(join(key, k.str()), "unknown key");
  }
  if (!t.contains("shape")) fail(key + ".shape", "missing");
  const std::string kind = string(*t.get("shape"), key + ".shape");
  auto need = [&](const char* k) -> const toml::node& {
    if (!t.contains(k)) fail(join(key, k), fmt::format("required for shape \"{}\"", kind));
    return *t.get(k);
  };
  try {
    Shape s = Shape::disk({0.0, 0.0}, 1.0);
    if (kind == "disk") {
      s = Shape::disk(point(need("center"), key + ".center"), number(need("radius"), key + ".radius"));
    } else if (kind == "ellipse") {
      s = Shape::ellipse(point(need("center"), key + ".center"), number(need("semi_a"), key + ".semi_a"),
                         number(need("semi_b"), key + ".semi_b"),
                         t.contains("rotation") ? number(*t.get("rotation"), key + ".rotation") : 0.0);
    } else if (kind == "polygon") {
      const auto* a = need("vertices").as_array();
      if (!a) fail(key + ".vertices", "expected an array of [x, y]");
      std::vector<Vec2> v;
      for (size_t i = 0; i < a->size(); ++i) v.push_back(point(*a->get(i), fmt::format("{}.vertices[{}]", key, i)));
      s = Shape::polygon(std::move(v));
    } else if (kind == "rectangle") {
      s = Shape::rectangle(point(need("lo"), key + ".lo"), point(need("hi"), key + ".hi"));
    } else if (kind == "cone_sector_cap") {
      s = Shape::cone_sector_cap(point(need("apex"), key + ".apex"), number(need("angle_lo"), key + ".angle_lo"),
                                 number(need("angle_hi"), key + ".angle_hi"), number(need("radius"), key + ".radius"));
    } else if (kind == "cone_fixture") {
      s = Shape::cone_fixture();
    } else {
      fail(key + ".shape", fmt::format("unknown shape \"{}\"", kind));
    }
    if (t.contains("offset")) s = s.translated(point(*t.get("offset"), key + ".offset"));
    return s;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(key, e.what());
  }
}

AbsorbingSpec absorbing_from(const toml::node& n, const std::string& key) {
  const toml::table& t = as_table(n, key);
  check_keys(t, key, {"a0", "b0", "a", "b", "k"});
  AbsorbingSpec s;
  if (t.contains("a0")) s.a0 = number(*t.get("a0"), key + ".a0");
  if (t.contains("b0")) s.b0 = number(*t.get("b0"), key + ".b0");
  if (t.contains("a")) s.a = number(*t.get("a"), key + ".a");
  if (t.contains("b")) s.b = number(*t.get("b"), key + ".b");
  if (t.contains("k")) s.k = number(*t.get("k"), key + ".k");
  if (!(s.k > 0.0)) fail(key + ".k", "must be positive");
  return s;
}

Part part_value(const toml::node& n, const std::string& key) {
  const std::string p = string(n, key);
  if (p == "re") return Part::kRe;
  if (p == "im") return Part::kIm;
  if (p == "abs") return Part::kAbs;
  fail(key, fmt::format("expected \"re\", \"im\" or \"abs\", got \"{}\"", p));
}

void apply_physics(const toml::table& t, const std::string& key, PhysicsCase& c) {
  if (t.contains("part")) c.part = part_value(*t.get("part"), key + ".part");
  if (t.contains("v0")) c.v0 = complex_value(*t.get("v0"), key + ".v0");
  if (t.contains("jump")) c.jump = complex_value(*t.get("jump"), key + ".jump");
  if (t.contains("lambda")) c.lambda = complex_value(*t.get("lambda"), key + ".lambda");
  if (t.contains("absorbing")) c.absorbing = absorbing_from(*t.get("absorbing"), key + ".absorbing");
}

PipelineKind pipeline_from(const std::string& s) {
  if (s == "penetrable") return PipelineKind::kPenetrable;
  if (s == "impenetrable") return PipelineKind::kImpenetrable;
  if (s == "probe") return PipelineKind::kProbe;
  if (s == "geometry") return PipelineKind::kGeometry;
  if (s == "cgo") return PipelineKind::kCgo;
  if (s == "verify") return PipelineKind::kVerify;
  fail("pipeline", fmt::format("unknown pipeline \"{}\"", s));
}

bool inside_strictly(const BoundingBox& outer, const BoundingBox& inner) {
  return inner.lo.x > outer.lo.x && inner.lo.y > outer.lo.y && inner.hi.x < outer.hi.x && inner.hi.y < outer.hi.y;
}

ExperimentConfig from_table(const toml::table& root, const std::filesystem::path& source) {
  ExperimentConfig c;
  c.source = source;
  check_keys(root, "", {"pipeline", "seed", "domain", "obstacle", "physics", "case", "mesh", "sweep", "cgo", "probe",
                        "geometry", "verify"});
  if (!root.contains("pipeline")) fail("pipeline", "missing");
  c.pipeline = pipeline_from(string(*root.get("pipeline"), "pipeline"));
  if (root.contains("seed")) c.seed = static_cast<std::uint64_t>(integer(*root.get("seed"), "seed", 0));

  if (root.contains("domain")) {
    const toml::table& t = as_table(*root.get("domain"), "domain");
    check_keys(t, "domain", {"lo", "hi"});
    if (t.contains("lo")) c.domain.lo = point(*t.get("lo"), "domain.lo");
    if (t.contains("hi")) c.domain.hi = point(*t.get("hi"), "domain.hi");
    if (!(c.domain.width() > 0.0) || !(c.domain.height() > 0.0)) fail("domain", "hi must exceed lo in both coordinates");
  }
  if (root.contains("obstacle")) c.obstacle = shape_from(as_table(*root.get("obstacle"), "obstacle"), "obstacle");

  PhysicsCase base;
  base.label = "base";
  if (root.contains("physics")) {
    const toml::table& t = as_table(*root.get("physics"), "physics");
    check_keys(t, "physics", {"k", "v0", "jump", "lambda", "absorbing", "part"});
    if (t.contains("k")) c.k = number(*t.get("k"), "physics.k");
    if (!(c.k >= 0.0)) fail("physics.k", "must be >= 0");
    apply_physics(t, "physics", base);
  }
  if (root.contains("case")) {
    const auto* arr = root.get("case")->as_array();
    if (!arr) fail("case", "expected [[case]] tables");
    for (size_t i = 0; i < arr->size(); ++i) {
      const std::string key = fmt::format("case[{}]", i);
      const toml::table& t = as_table(*arr->get(i), key);
      check_keys(t, key, {"label", "v0", "jump", "lambda", "absorbing", "part"});
      PhysicsCase pc = base;
      pc.label = t.contains("label") ? string(*t.get("label"), key + ".label") : fmt::format("case{}", i);
      apply_physics(t, key, pc);
      for (const auto& other : c.cases) {
        if (other.label == pc.label) fail(key + ".label", fmt::format("duplicate label \"{}\"", pc.label));
      }
      c.cases.push_back(pc);
    }
  }
  if (c.cases.empty()) c.cases.push_back(base);

  if (root.contains("mesh")) {
    const toml::table& t = as_table(*root.get("mesh"), "mesh");
    check_keys(t, "mesh", {"n", "n_r", "n_t", "refine"});
    if (t.contains("n")) c.n = static_cast<int>(integer(*t.get("n"), "mesh.n", 1));
    if (t.contains("n_r")) c.n_r = static_cast<int>(integer(*t.get("n_r"), "mesh.n_r", 4));
    if (t.contains("n_t")) c.n_t = static_cast<int>(integer(*t.get("n_t"), "mesh.n_t", 16));
    if (t.contains("refine")) c.refine = static_cast<int>(integer(*t.get("refine"), "mesh.refine", 2));
    if (c.n_t % 4 != 0) fail("mesh.n_t", "must be divisible by 4");
  }

  if (root.contains("sweep")) {
    const toml::table& t = as_table(*root.get("sweep"), "sweep");
    check_keys(t, "sweep", {"tau", "directions", "offset", "random_offset", "t_grid", "part"});
    if (t.contains("tau")) c.taus = sweep(*t.get("tau"), "sweep.tau");
    if (t.contains("directions")) c.directions = static_cast<int>(integer(*t.get("directions"), "sweep.directions", 1));
    if (t.contains("offset")) c.direction_offset = number(*t.get("offset"), "sweep.offset");
    if (t.contains("random_offset")) c.random_offset = boolean(*t.get("random_offset"), "sweep.random_offset");
    if (t.contains("t_grid")) c.t_grid = sweep(*t.get("t_grid"), "sweep.t_grid");
    if (t.contains("part")) c.part = part_value(*t.get("part"), "sweep.part");
  }
  require_increasing(c.taus, "sweep.tau", true);
  require_increasing(c.t_grid, "sweep.t_grid", false);

  if (root.contains("cgo")) {
    const toml::table& t = as_table(*root.get("cgo"), "cgo");
    check_keys(t, "cgo", {"family", "n", "max_iterations", "tolerance", "discrete_probes", "direction", "dump_fields"});
    if (t.contains("family")) {
      const std::string f = string(*t.get("family"), "cgo.family");
      if (f == "exponential") c.cgo_family = CgoSource::Kind::kExponential;
      else if (f == "faddeev") c.cgo_family = CgoSource::Kind::kFaddeev;
      else fail("cgo.family", fmt::format("expected \"exponential\" or \"faddeev\", got \"{}\"", f));
    }
    if (t.contains("n")) c.cgo_n = static_cast<int>(integer(*t.get("n"), "cgo.n", 16));
    if (c.cgo_n & (c.cgo_n - 1)) fail("cgo.n", fmt::format("must be a power of two, got {}", c.cgo_n));
    if (t.contains("max_iterations")) {
      c.faddeev.max_iterations = static_cast<int>(integer(*t.get("max_iterations"), "cgo.max_iterations", 1));
    }
    if (t.contains("tolerance")) c.faddeev.tolerance = number(*t.get("tolerance"), "cgo.tolerance");
    if (t.contains("discrete_probes")) c.discrete_probes = boolean(*t.get("discrete_probes"), "cgo.discrete_probes");
    if (t.contains("direction")) c.cgo_direction = number(*t.get("direction"), "cgo.direction");
    if (t.contains("dump_fields")) c.cgo_dump_fields = boolean(*t.get("dump_fields"), "cgo.dump_fields");
  }

  if (root.contains("probe")) {
    const toml::table& t = as_table(*root.get("probe"), "probe");
    check_keys(t, "probe", {"rays", "ray_offset", "distances", "map"});
    if (t.contains("rays")) c.rays = static_cast<int>(integer(*t.get("rays"), "probe.rays", 1));
    if (t.contains("ray_offset")) c.ray_offset = number(*t.get("ray_offset"), "probe.ray_offset");
    if (t.contains("distances")) c.distances = numbers(*t.get("distances"), "probe.distances");
    if (t.contains("map")) c.probe_map = static_cast<int>(integer(*t.get("map"), "probe.map", 0));
    for (double d : c.distances) {
      if (!(d > 0.0)) fail("probe.distances", "distances must be positive");
    }
  }

  if (root.contains("geometry")) {
    const toml::table& t = as_table(*root.get("geometry"), "geometry");
    check_keys(t, "geometry", {"item", "slices", "s_max_fraction"});
    if (t.contains("slices")) c.slices = static_cast<int>(integer(*t.get("slices"), "geometry.slices", 2));
    if (t.contains("s_max_fraction")) c.s_max_fraction = number(*t.get("s_max_fraction"), "geometry.s_max_fraction");
    if (!(c.s_max_fraction > 0.0 && c.s_max_fraction <= 1.0)) fail("geometry.s_max_fraction", "must be in (0, 1]");
    if (t.contains("item")) {
      const auto* arr = t.get("item")->as_array();
      if (!arr) fail("geometry.item", "expected [[geometry.item]] tables");
      for (size_t i = 0; i < arr->size(); ++i) {
        const std::string key = fmt::format("geometry.item[{}]", i);
        const toml::table& it = as_table(*arr->get(i), key);
        GeometryItem g;
        g.shape = shape_from(it, key, {"label", "direction"});
        g.label = it.contains("label") ? string(*it.get("label"), key + ".label") : g.shape.kind_name();
        if (it.contains("direction")) g.direction = Direction::from_angle(number(*it.get("direction"), key + ".direction"));
        c.shapes.push_back(std::move(g));
      }
    }
  }

  if (root.contains("verify")) {
    const toml::table& t = as_table(*root.get("verify"), "verify");
    check_keys(t, "verify", {"suites", "two_path_tol", "representation_tol", "plane_waves", "ineq_plane_waves",
                             "ineq_taus", "c2_cap", "ineq_stability", "lemma_taus", "bound_tau_max", "bound_fraction",
                             "cgo_residual_tol", "reflected_taus", "reflected_spread", "fem_grids", "fem_order"});
    if (t.contains("suites")) {
      const auto* a = t.get("suites")->as_array();
      if (!a) fail("verify.suites", "expected an array of suite names");
      for (size_t i = 0; i < a->size(); ++i) {
        const std::string s = string(*a->get(i), fmt::format("verify.suites[{}]", i));
        const auto& known = known_suites();
        if (std::find(known.begin(), known.end(), s) == known.end()) {
          fail(fmt::format("verify.suites[{}]", i), fmt::format("unknown suite \"{}\"", s));
        }
        c.suites.push_back(s);
      }
    }
    auto num = [&](const char* k, double& dst) {
      if (t.contains(k)) dst = number(*t.get(k), join("verify", k));
    };
    auto cnt = [&](const char* k, int& dst) {
      if (t.contains(k)) dst = static_cast<int>(integer(*t.get(k), join("verify", k), 1));
    };
    num("two_path_tol", c.two_path_tol);
    num("representation_tol", c.representation_tol);
    cnt("plane_waves", c.plane_waves);
    cnt("ineq_plane_waves", c.ineq_plane_waves);
    if (t.contains("ineq_taus")) c.ineq_taus = numbers(*t.get("ineq_taus"), "verify.ineq_taus");
    num("c2_cap", c.c2_cap);
    num("ineq_stability", c.ineq_stability);
    if (t.contains("lemma_taus")) c.lemma_taus = numbers(*t.get("lemma_taus"), "verify.lemma_taus");
    num("bound_tau_max", c.bound_tau_max);
    num("bound_fraction", c.bound_fraction);
    num("cgo_residual_tol", c.cgo_residual_tol);
    if (t.contains("reflected_taus")) c.reflected_taus = numbers(*t.get("reflected_taus"), "verify.reflected_taus");
    num("reflected_spread", c.reflected_spread);
    if (t.contains("fem_grids")) {
      c.fem_grids.clear();
      for (double g : numbers(*t.get("fem_grids"), "verify.fem_grids")) c.fem_grids.push_back(static_cast<int>(g));
      if (c.fem_grids.size() < 2) fail("verify.fem_grids", "needs at least two grids");
    }
    num("fem_order", c.fem_order);
    require_increasing(c.ineq_taus, "verify.ineq_taus", true);
    require_increasing(c.lemma_taus, "verify.lemma_taus", true);
    require_increasing(c.reflected_taus, "verify.reflected_taus", true);
  }

  // cross-field checks
  const bool sweeps = c.pipeline == PipelineKind::kPenetrable || c.pipeline == PipelineKind::kImpenetrable;
  if (sweeps && c.taus.size() < 3) fail("sweep.tau", "needs at least 3 values");
  if (c.pipeline == PipelineKind::kCgo && c.taus.empty()) fail("sweep.tau", "needs at least one value");
  if (sweeps || c.pipeline == PipelineKind::kProbe) c.require_obstacle();
  if (c.obstacle && (c.pipeline == PipelineKind::kImpenetrable || c.pipeline == PipelineKind::kProbe) &&
      !inside_strictly(c.domain, c.obstacle->bounding_box())) {
    fail("obstacle", "must lie strictly inside the domain");
  }
  if (c.pipeline == PipelineKind::kProbe && c.distances.empty()) fail("probe.distances", "needs at least one distance");
  if (c.pipeline == PipelineKind::kGeometry && c.shapes.empty()) fail("geometry.item", "needs at least one item");
  if (c.pipeline == PipelineKind::kVerify && c.suites.empty()) fail("verify.suites", "needs at least one suite");
  return c;
}

}  // namespace

const char* to_string(PipelineKind p) {
  switch (p) {
    case PipelineKind::kPenetrable: return "penetrable";
    case PipelineKind::kImpenetrable: return "impenetrable";
    case PipelineKind::kProbe: return "probe";
    case PipelineKind::kGeometry: return "geometry";
    case PipelineKind::kCgo: return "cgo";
    case PipelineKind::kVerify: return "verify";
  }
  return "?";
}

std::vector<Direction> ExperimentConfig::sweep_directions() const {
  if (!random_offset) return uniform_directions(directions, direction_offset);
  std::mt19937_64 rng(seed);
  // the raw engine output is portable; distribution objects are not
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return uniform_directions(directions, direction_offset + u * 2.0 * kPi / directions);
}

const Shape& ExperimentConfig::require_obstacle() const {
  if (!obstacle) fail("obstacle", fmt::format("required by the {} pipeline", to_string(pipeline)));
  return *obstacle;
}

ExperimentConfig parse_config(std::string_view toml_text, const std::filesystem::path& source) {
  try {
    const toml::table root = toml::parse(toml_text, source.string());
    return from_table(root, source);
  } catch (const toml::parse_error& e) {
    const auto& where = e.source().begin;
    throw ConfigError(fmt::format("{}:{}:{}: {}", source.string(), where.line, where.column, e.description()));
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read config file {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace enclab
