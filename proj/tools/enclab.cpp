#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "enclab/errors.hpp"
#include "enclab/experiment.hpp"
#include "enclab/mesh.hpp"

using namespace enclab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitVerification = 4;

int exit_code(ErrorClass c) {
  switch (c) {
    case ErrorClass::kConfig:
    case ErrorClass::kInput: return kExitConfig;
    case ErrorClass::kSolver: return kExitSolver;
    case ErrorClass::kVerification: return kExitVerification;
  }
  return kExitSolver;
}

struct Globals {
  std::string config;
  std::string out;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
};

ExperimentConfig load(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config: a config file is required");
  ExperimentConfig c = load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  return c;
}

RunOptions options(const Globals& g) {
  RunOptions o;
  if (!g.out.empty()) o.out_dir = g.out;
  o.jobs = g.jobs;
  return o;
}

void print_summary(const RunResult& r) {
  for (const auto& c : r.cases) {
    fmt::print("case {}\n", c.label);
    for (const auto& d : c.directions) {
      fmt::print("  angle {:8.5f}  h_hat {:9.5f}  r2 {:.5f}  used {}\n", d.estimate.direction.angle(), d.estimate.h_hat,
                 d.estimate.r2, d.estimate.n_used);
    }
    if (c.hull) fmt::print("  hull vertices {}\n", c.hull->vertices.size());
  }
  for (const auto& ray : r.rays) {
    fmt::print("ray {} angle {:.5f}:", ray.case_label, ray.direction.angle());
    for (double v : ray.values) fmt::print(" {:.6g}", v);
    fmt::print("\n");
  }
  if (!r.files.empty()) fmt::print("wrote {} files and manifest.json\n", r.files.size());
}

int report_checks(const RunResult& r) {
  bool ok = true;
  for (const auto& c : r.checks) {
    fmt::print("{:<16} {:<48} {:>14.6g} {:>12.6g} {}\n", c.suite, c.check, c.measured, c.threshold,
               c.pass ? "PASS" : "FAIL");
    ok = ok && c.pass;
  }
  return ok ? kExitOk : kExitVerification;
}

int cmd_run(const Globals& g, std::optional<PipelineKind> required) {
  const ExperimentConfig c = load(g);
  if (required && c.pipeline != *required) {
    throw ConfigError(fmt::format("pipeline: this subcommand needs pipeline = \"{}\", the config has \"{}\"",
                                  to_string(*required), to_string(c.pipeline)));
  }
  const RunResult r = run_experiment(c, options(g));
  if (c.pipeline == PipelineKind::kVerify) return report_checks(r);
  print_summary(r);
  return kExitOk;
}

int cmd_verify(const Globals& g, const std::vector<std::string>& suites) {
  ExperimentConfig c = load(g);
  c.pipeline = PipelineKind::kVerify;
  RunOptions o = options(g);
  o.suites = suites;
  return report_checks(run_experiment(c, o));
}

int cmd_mesh_gen(const Globals& g) {
  const ExperimentConfig c = load(g);
  const bool exterior = c.pipeline == PipelineKind::kImpenetrable || c.pipeline == PipelineKind::kProbe;
  const auto mesh = exterior ? exterior_mesh(c) : uniform_mesh(c);
  if (g.out.empty()) {
    write_mesh(*mesh, std::cout);
  } else {
    std::filesystem::create_directories(g.out);
    write_mesh(*mesh, std::filesystem::path(g.out) / "mesh.emesh");
    fmt::print("{} nodes, {} triangles -> {}\n", mesh->nodes.size(), mesh->triangles.size(),
               (std::filesystem::path(g.out) / "mesh.emesh").string());
  }
  return kExitOk;
}

int cmd_mesh_check(const std::string& path) {
  const Mesh m = read_mesh(std::filesystem::path(path));
  fmt::print("ok: {} nodes, {} triangles, {} boundary edges ({} outer nodes, {} obstacle nodes)\n", m.nodes.size(),
             m.triangles.size(), m.boundary_edges.size(), m.boundary_nodes(Marker::kOuter).size(),
             m.boundary_nodes(Marker::kObstacle).size());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Enclosure-method obstacle reconstruction experiments"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment config (TOML)");
  app.add_option("--out", g.out, "Output directory for CSV artifacts and manifest.json");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Override the config seed");

  auto* run = app.add_subcommand("run", "Run the configured pipeline")->fallthrough();
  auto* verify = app.add_subcommand("verify", "Run verification suites and report pass/fail")->fallthrough();
  std::vector<std::string> suites;
  verify->add_option("--suite", suites, "Suite to run (repeatable); defaults to the config's verify.suites")
      ->check(CLI::IsMember(known_suites()));
  auto* geometry = app.add_subcommand("geometry", "Slice measures and ratio curves for configured shapes")->fallthrough();
  auto* cgo = app.add_subcommand("cgo", "Solve for CGO remainders over the tau sweep")->fallthrough();
  auto* mesh = app.add_subcommand("mesh", "Generate or check meshes")->fallthrough();
  mesh->require_subcommand(1);
  auto* gen = mesh->add_subcommand("gen", "Write the mesh the config describes")->fallthrough();
  auto* check = mesh->add_subcommand("check", "Validate a mesh file");
  std::string mesh_path;
  check->add_option("file", mesh_path, "Mesh file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(g, std::nullopt);
    if (*verify) return cmd_verify(g, suites);
    if (*geometry) return cmd_run(g, PipelineKind::kGeometry);
    if (*cgo) return cmd_run(g, PipelineKind::kCgo);
    if (*gen) return cmd_mesh_gen(g);
    if (*check) return cmd_mesh_check(mesh_path);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code(e.error_class());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitSolver;
  }
  return kExitOk;
}
