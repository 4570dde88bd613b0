#include "enclab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "enclab/errors.hpp"
#include "parallel_for.hpp"

namespace enclab {

namespace {

using detail::parallel_for;

std::string num(double x) { return fmt::format("{:.17g}", x); }

/// Collects artifacts and writes them in call order; nothing is written without a directory.
class Output {
 public:
  explicit Output(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
    if (dir_) std::filesystem::create_directories(*dir_);
  }

  void write(const std::string& name, const std::string& content) {
    if (!dir_) return;
    std::ofstream out(*dir_ / name, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw InvalidArgument(fmt::format("cannot write {}", (*dir_ / name).string()));
    files_.emplace_back(name);
  }

  /// manifest.json: every artifact with its size and SHA-256, sorted by name.
  void write_manifest(const ExperimentConfig& config) {
    if (!dir_) return;
    auto files = files_;
    std::sort(files.begin(), files.end());
    nlohmann::ordered_json m;
    m["pipeline"] = to_string(config.pipeline);
    m["config"] = config.source.filename().string();
    m["seed"] = config.seed;
    m["files"] = nlohmann::ordered_json::array();
    for (const auto& f : files) {
      m["files"].push_back({{"path", f.generic_string()},
                            {"bytes", std::filesystem::file_size(*dir_ / f)},
                            {"sha256", sha256_file(*dir_ / f)}});
    }
    std::ofstream out(*dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
    out << m.dump(2) << '\n';
  }

  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::optional<std::filesystem::path> dir_;
  std::vector<std::filesystem::path> files_;
};

std::string indicator_csv(const IndicatorSeries& s) {
  std::string out = "tau,re_I,im_I,log_abs_I,reliable\n";
  for (const auto& x : s.samples) {
    const cplx v = x.value();
    out += fmt::format("{},{},{},{},{}\n", num(x.tau), num(v.real()), num(v.imag()), num(x.log_abs()), x.reliable ? 1 : 0);
  }
  return out;
}

std::string support_csv(const CaseResult& c) {
  std::string out = "direction,angle,omega_x,omega_y,h_hat,slope_stderr,r2,n_used,t_star\n";
  for (size_t i = 0; i < c.directions.size(); ++i) {
    const auto& d = c.directions[i];
    const Vec2 w = d.estimate.direction.omega();
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", i, num(d.estimate.direction.angle()), num(w.x), num(w.y),
                       num(d.estimate.h_hat), num(d.estimate.slope_stderr), num(d.estimate.r2), d.estimate.n_used,
                       d.t_star ? num(*d.t_star) : std::string("nan"));
  }
  return out;
}

std::string polygon_csv(std::span<const Vec2> v) {
  std::string out = "x,y\n";
  for (Vec2 p : v) out += fmt::format("{},{}\n", num(p.x), num(p.y));
  return out;
}

/// Estimate, optional threshold, and hull for one case.
CaseResult finish_case(const ExperimentConfig& config, const PhysicsCase& pc, std::vector<IndicatorSeries> series) {
  CaseResult r;
  r.label = pc.label;
  std::vector<SupportEstimate> estimates;
  for (auto& s : series) {
    DirectionResult d;
    d.estimate = extract_support(s, config.part_for(pc));
    if (!config.t_grid.empty()) {
      try {
        d.t_star = threshold_characterization(s, config.part_for(pc), config.t_grid);
      } catch (const NoBracket&) {
        // no decay over the grid; the column reads nan
      }
    }
    d.series = std::move(s);
    estimates.push_back(d.estimate);
    r.directions.push_back(std::move(d));
  }
  if (estimates.size() >= 3) r.hull = assemble_hull(estimates, config.domain);
  return r;
}

void write_case(Output& out, const CaseResult& c) {
  for (size_t i = 0; i < c.directions.size(); ++i) {
    out.write(fmt::format("indicator_{}_{:02}.csv", c.label, i), indicator_csv(c.directions[i].series));
  }
  out.write(fmt::format("support_{}.csv", c.label), support_csv(c));
  if (c.hull) out.write(fmt::format("hull_{}.csv", c.label), polygon_csv(c.hull->vertices));
}

CgoSource case_source(const ExperimentConfig& config, const PhysicsCase& pc) {
  const cplx v0 = case_background(pc);
  if (config.cgo_family == CgoSource::Kind::kFaddeev) {
    auto grid = std::make_shared<const PotentialGrid>(
        PotentialGrid::sample(config.domain, config.cgo_n, [v0](Vec2) { return v0; }));
    return CgoSource::faddeev(std::move(grid), config.faddeev);
  }
  CgoSource s = CgoSource::exponential(v0);
  s.discrete_probes = config.discrete_probes;
  return s;
}

void run_penetrable(const ExperimentConfig& config, int jobs, RunResult& result, Output& out) {
  const auto mesh = uniform_mesh(config);
  const auto dirs = config.sweep_directions();
  for (const auto& pc : config.cases) {
    const PenetrableModel model(mesh, case_potentials(config, pc, *mesh), case_source(config, pc));
    std::vector<IndicatorSeries> series(dirs.size());
    parallel_for(static_cast<int>(dirs.size()), jobs, [&](int i) {
      series[static_cast<size_t>(i)] = enclosure_penetrable(model, dirs[static_cast<size_t>(i)], config.taus);
    });
    result.cases.push_back(finish_case(config, pc, std::move(series)));
    write_case(out, result.cases.back());
  }
}

void run_impenetrable(const ExperimentConfig& config, int jobs, RunResult& result, Output& out) {
  const auto mesh = exterior_mesh(config);
  const auto dirs = config.sweep_directions();
  for (const auto& pc : config.cases) {
    const ImpenetrableModel model(mesh, config.k, Impedance::constant(mesh->nodes.size(), pc.lambda));
    std::vector<IndicatorSeries> series(dirs.size());
    parallel_for(static_cast<int>(dirs.size()), jobs, [&](int i) {
      series[static_cast<size_t>(i)] = enclosure_impenetrable(model, dirs[static_cast<size_t>(i)], config.taus);
    });
    result.cases.push_back(finish_case(config, pc, std::move(series)));
    write_case(out, result.cases.back());
  }
}

/// Boundary point of `shape` with outward normal omega.
Vec2 support_point(const Shape& shape, const Direction& dir) {
  if (const auto* d = std::get_if<Disk>(&shape.kind())) return d->center + d->radius * dir.omega();
  const auto poly = shape.boundary_polyline(4096);
  return *std::max_element(poly.begin(), poly.end(),
                           [&](Vec2 a, Vec2 b) { return dot(a, dir.omega()) < dot(b, dir.omega()); });
}

void run_probe(const ExperimentConfig& config, int jobs, RunResult& result, Output& out) {
  const Shape& obstacle = config.require_obstacle();
  const auto mesh = exterior_mesh(config);
  const auto dirs = uniform_directions(config.rays, config.ray_offset);
  std::string csv = "case,ray,angle,distance,x,y,I\n";
  for (const auto& pc : config.cases) {
    const ImpenetrableModel model(mesh, config.k, Impedance::constant(mesh->nodes.size(), pc.lambda));
    std::vector<ProbeRay> rays(dirs.size());
    parallel_for(static_cast<int>(dirs.size()), jobs, [&](int i) {
      ProbeRay& r = rays[static_cast<size_t>(i)];
      r.case_label = pc.label;
      r.direction = dirs[static_cast<size_t>(i)];
      const Vec2 base = support_point(obstacle, r.direction);
      for (double dist : config.distances) {
        const Vec2 y = base + dist * r.direction.omega();
        r.distances.push_back(dist);
        r.points.push_back(y);
        r.values.push_back(probe_indicator(model, y));
      }
    });
    for (size_t i = 0; i < rays.size(); ++i) {
      const auto& r = rays[i];
      for (size_t j = 0; j < r.points.size(); ++j) {
        csv += fmt::format("{},{},{},{},{},{},{}\n", pc.label, i, num(r.direction.angle()), num(r.distances[j]),
                           num(r.points[j].x), num(r.points[j].y), num(r.values[j]));
      }
      result.rays.push_back(r);
    }

    if (config.probe_map > 0) {
      const int m = config.probe_map;
      std::vector<std::optional<double>> values(static_cast<size_t>(m) * static_cast<size_t>(m));
      auto at = [&](int i, int j) {
        return Vec2{config.domain.lo.x + config.domain.width() * (i + 0.5) / m,
                    config.domain.lo.y + config.domain.height() * (j + 0.5) / m};
      };
      parallel_for(m * m, jobs, [&](int idx) {
        try {
          values[static_cast<size_t>(idx)] = probe_indicator(model, at(idx % m, idx / m));
        } catch (const SourceTooClose&) {
          // inside or next to D, or at the outer boundary: left out of the map
        }
      });
      std::string map = "x,y,I\n";
      for (int idx = 0; idx < m * m; ++idx) {
        if (!values[static_cast<size_t>(idx)]) continue;
        const Vec2 y = at(idx % m, idx / m);
        map += fmt::format("{},{},{}\n", num(y.x), num(y.y), num(*values[static_cast<size_t>(idx)]));
      }
      out.write(fmt::format("probe_map_{}.csv", pc.label), map);
    }
  }
  out.write("probe.csv", csv);
}

std::vector<double> geometry_taus(const ExperimentConfig& config) {
  if (!config.taus.empty()) return config.taus;
  std::vector<double> t;
  for (int i = 1; i <= 20; ++i) t.push_back(10.0 * i);
  return t;
}

void run_geometry(const ExperimentConfig& config, Output& out) {
  const auto taus = geometry_taus(config);
  std::string summary = "label,angle,support,width,fitted_p,fit_r2\n";
  for (const auto& item : config.shapes) {
    const double w = width(item.shape, item.direction);
    const SliceProfile prof =
        estimate_p_regularity(item.shape, item.direction, config.s_max_fraction * w, config.slices);
    summary += fmt::format("{},{},{},{},{},{}\n", item.label, num(item.direction.angle()),
                           num(support_function(item.shape, item.direction)), num(w), num(prof.fitted_p),
                           num(prof.fit_r2));

    std::string slices = "s,mu\n";
    for (int i = 0; i <= config.slices; ++i) {
      const double s = w * i / config.slices;
      slices += fmt::format("{},{}\n", num(s), num(slice_measure(item.shape, item.direction, s)));
    }
    out.write(fmt::format("slices_{}.csv", item.label), slices);

    std::string ratio = "tau,ratio,bound\n";
    for (double tau : taus) {
      ratio += fmt::format("{},{},{}\n", num(tau), num(l1_l2_ratio(item.shape, item.direction, tau)),
                           num(weighted_l2_lower_bound(item.shape, item.direction, tau, prof.fitted_p)));
    }
    out.write(fmt::format("ratio_{}.csv", item.label), ratio);
  }
  out.write("geometry.csv", summary);
}

void run_cgo(const ExperimentConfig& config, int jobs, Output& out) {
  const Direction dir = Direction::from_angle(config.cgo_direction);
  for (const auto& pc : config.cases) {
    const PotentialGrid grid = cgo_potential(config, pc);
    std::vector<CGOField> fields(config.taus.size());
    std::vector<double> residuals(config.taus.size());
    parallel_for(static_cast<int>(config.taus.size()), jobs, [&](int i) {
      const auto k = static_cast<size_t>(i);
      fields[k] = solve_faddeev(grid, dir, config.taus[k], config.faddeev);
      residuals[k] = cgo_residual(fields[k], grid);
    });
    std::string summary = "tau,sup_psi,iterations,contraction,residual\n";
    for (size_t k = 0; k < fields.size(); ++k) {
      summary += fmt::format("{},{},{},{},{}\n", num(config.taus[k]), num(fields[k].sup_psi), fields[k].iterations,
                             num(fields[k].contraction), num(residuals[k]));
      if (config.cgo_dump_fields) {
        const CgoGrid& g = fields[k].grid;
        std::string csv = "x,y,re_psi,im_psi\n";
        for (int j = 0; j <= g.ny; ++j) {
          for (int i = 0; i <= g.nx; ++i) {
            const Vec2 x = g.point(i, j);
            const cplx p = fields[k].psi[g.index(i, j)];
            csv += fmt::format("{},{},{},{}\n", num(x.x), num(x.y), num(p.real()), num(p.imag()));
          }
        }
        out.write(fmt::format("psi_{}_{:02}.csv", pc.label, k), csv);
      }
    }
    out.write(fmt::format("cgo_{}.csv", pc.label), summary);
  }
}

void run_verify(const ExperimentConfig& config, const RunOptions& options, RunResult& result, Output& out) {
  const auto& suites = options.suites.empty() ? config.suites : options.suites;
  if (suites.empty()) throw ConfigError("verify.suites: no suite selected");
  for (const auto& s : suites) {
    auto checks = run_suite(config, s, options.jobs);
    result.checks.insert(result.checks.end(), checks.begin(), checks.end());
  }
  std::string csv = "suite,check,measured,threshold,pass\n";
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& c : result.checks) {
    csv += fmt::format("{},{},{},{},{}\n", c.suite, c.check, num(c.measured), num(c.threshold), c.pass ? 1 : 0);
    j.push_back({{"suite", c.suite}, {"check", c.check}, {"measured", c.measured}, {"threshold", c.threshold},
                 {"pass", c.pass}});
  }
  out.write("report.csv", csv);
  out.write("report.json", j.dump(2) + "\n");
}

}  // namespace

std::shared_ptr<const Mesh> uniform_mesh(const ExperimentConfig& config, int factor) {
  const int nx = config.n * factor;
  const int ny = std::max(1, static_cast<int>(std::lround(nx * config.domain.height() / config.domain.width())));
  return std::make_shared<const Mesh>(build_uniform(config.domain, nx, ny));
}

std::shared_ptr<const Mesh> exterior_mesh(const ExperimentConfig& config, int factor) {
  const Shape& obstacle = config.require_obstacle();
  if (!std::holds_alternative<Disk>(obstacle.kind())) {
    throw ConfigError(fmt::format("obstacle: the exterior mesh needs a disk, got {}", obstacle.kind_name()));
  }
  try {
    return std::make_shared<const Mesh>(build_ogrid(Shape::rectangle(config.domain.lo, config.domain.hi), obstacle,
                                                    config.n_r * factor, config.n_t * factor));
  } catch (const GeometryClash& e) {
    throw ConfigError(fmt::format("obstacle: {}", e.what()));
  }
}

cplx case_background(const PhysicsCase& c) {
  if (c.absorbing) return {c.absorbing->a0, c.absorbing->b0 / c.absorbing->k};
  return c.v0;
}

PotentialField case_potentials(const ExperimentConfig& config, const PhysicsCase& c, const Mesh& mesh) {
  const Shape& d = config.require_obstacle();
  if (c.absorbing) {
    const AbsorbingSpec s = *c.absorbing;
    return absorbing_medium_potentials(
        mesh, s.a0, s.b0, [&](Vec2 x) { return d.contains(x) ? s.a : s.a0; },
        [&](Vec2 x) { return d.contains(x) ? s.b : s.b0; }, s.k);
  }
  const auto n = static_cast<Eigen::Index>(mesh.nodes.size());
  return PotentialField::make(CVector::Constant(n, c.v0),
                              interpolate(mesh, [&](Vec2 x) { return d.contains(x) ? c.jump : cplx(0.0); }));
}

PotentialGrid cgo_potential(const ExperimentConfig& config, const PhysicsCase& c) {
  const cplx v0 = case_background(c);
  if (!config.obstacle) return PotentialGrid::sample(config.domain, config.cgo_n, [v0](Vec2) { return v0; });
  const Shape d = *config.obstacle;
  return PotentialGrid::sample(config.domain, config.cgo_n, [v0, d](Vec2 x) { return d.contains(x) ? v0 : cplx(0.0); });
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument(fmt::format("cannot read {}", path.string()));
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  RunResult result;
  result.pipeline = config.pipeline;
  Output out(options.out_dir);
  switch (config.pipeline) {
    case PipelineKind::kPenetrable: run_penetrable(config, options.jobs, result, out); break;
    case PipelineKind::kImpenetrable: run_impenetrable(config, options.jobs, result, out); break;
    case PipelineKind::kProbe: run_probe(config, options.jobs, result, out); break;
    case PipelineKind::kGeometry: run_geometry(config, out); break;
    case PipelineKind::kCgo: run_cgo(config, options.jobs, out); break;
    case PipelineKind::kVerify: run_verify(config, options, result, out); break;
  }
  out.write_manifest(config);
  result.files = out.files();
  return result;
}

}  // namespace enclab
