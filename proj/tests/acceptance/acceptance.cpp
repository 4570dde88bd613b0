// Runs every acceptance criterion from its checked-in config and prints one PASS/FAIL line each.
// Usage: acceptance CONFIG_DIR [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>

#include <fmt/format.h>

#include "enclab/errors.hpp"
#include "enclab/experiment.hpp"

using namespace enclab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_dir;

ExperimentConfig config_for(int n) {
  const std::string prefix = fmt::format("c{:02}_", n);
  for (const auto& e : fs::directory_iterator(g_dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && e.path().extension() == ".toml") return load_config(e.path());
  }
  throw ConfigError(fmt::format("no config {}*.toml in {}", prefix, g_dir.string()));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Sign of part(I) on the fit window when it is the same for every direction, else 0.
int window_sign(const CaseResult& c, Part part) {
  int sign = 0;
  for (const auto& d : c.directions) {
    for (const IndicatorSample* s : fit_samples(d.series)) {
      const int k = s->sign_part(part);
      if (k == 0 || (sign != 0 && k != sign)) return 0;
      sign = k;
    }
  }
  return sign;
}

double worst_support_error(const CaseResult& c, const Shape& d) {
  double worst = 0.0;
  for (const auto& r : c.directions) {
    worst = std::max(worst, std::abs(r.estimate.h_hat - support_function(d, r.estimate.direction)));
  }
  return worst;
}

/// A verify config: every check passes. `limits` guards the thresholds the config carries.
Outcome suites(int n, const std::function<void(const ExperimentConfig&)>& limits = {}) {
  const ExperimentConfig c = config_for(n);
  if (limits) limits(c);
  const RunResult r = run_experiment(c);
  Outcome o{!r.checks.empty(), ""};
  int failed = 0;
  for (const auto& k : r.checks) {
    if (!k.pass) {
      ++failed;
      o.detail += fmt::format(" [{} {} = {:.4g} vs {:.4g}]", k.suite, k.check, k.measured, k.threshold);
    }
  }
  o.pass = o.pass && failed == 0;
  o.detail = fmt::format("{} checks, {} failed", r.checks.size(), failed) + o.detail;
  if (o.pass) {
    for (const auto& k : r.checks) o.detail += fmt::format("; {} {:.4g}", k.check, k.measured);
  }
  return o;
}

void limit(bool ok, const char* what) {
  if (!ok) throw ConfigError(fmt::format("config threshold {} is looser than the criterion", what));
}

Outcome penetrable_real() {
  const ExperimentConfig c = config_for(1);
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult r = run_experiment(c);
  const double elapsed = seconds_since(t0);
  const auto& res = r.cases.front();
  const double err = worst_support_error(res, *c.obstacle);
  const double haus = hausdorff_distance(res.hull->vertices, *c.obstacle);
  return {err <= 0.05 && haus <= 0.08 && elapsed <= 600.0,
          fmt::format("worst |h_hat - h| {:.4f} (<= 0.05), hull Hausdorff {:.4f} (<= 0.08), {:.1f} s (<= 600)", err,
                      haus, elapsed)};
}

Outcome penetrable_absorbing() {
  const ExperimentConfig c = config_for(2);
  const RunResult r = run_experiment(c);
  const auto& res = r.cases.front();
  const double err = worst_support_error(res, *c.obstacle);
  const int sign = window_sign(res, Part::kIm);
  return {err <= 0.05 && sign > 0,
          fmt::format("Im-part worst |h_hat - h| {:.4f} (<= 0.05), Im I sign on fit window {:+d} (want +1)", err, sign)};
}

Outcome sign_laws() {
  const ExperimentConfig c = config_for(3);
  const RunResult r = run_experiment(c);
  bool ok = true;
  int positive = 0, negative = 0;
  std::string detail;
  for (size_t i = 0; i < c.cases.size(); ++i) {
    const PhysicsCase& pc = c.cases[i];
    const Part part = c.part_for(pc);
    const double jump = part == Part::kIm ? pc.jump.imag() : pc.jump.real();
    const int want = jump > 0 ? 1 : (jump < 0 ? -1 : 0);
    const int got = window_sign(r.cases[i], part);
    ok = ok && want != 0 && got == want;
    (want > 0 ? positive : negative) += 1;
    detail += fmt::format("{}{} {} sign {:+d}", detail.empty() ? "" : ", ", pc.label, to_string(part), got);
  }
  return {ok && positive > 0 && negative > 0, detail};
}

Outcome impenetrable() {
  const ExperimentConfig c = config_for(5);
  const RunResult r = run_experiment(c);
  bool ok = true;
  std::string detail;
  for (size_t i = 0; i < c.cases.size(); ++i) {
    const double err = worst_support_error(r.cases[i], *c.obstacle);
    ok = ok && err <= 0.05;
    detail += fmt::format("{}{} worst |h_hat - h| {:.4f}", detail.empty() ? "" : ", ", c.cases[i].label, err);
    if (c.cases[i].lambda == 0.0) {
      const int sign = window_sign(r.cases[i], Part::kRe);
      ok = ok && sign > 0;
      detail += fmt::format(" sign {:+d}", sign);
    }
  }
  return {ok, detail + " (<= 0.05, sound-hard sign +1)"};
}

Outcome probe() {
  const ExperimentConfig c = config_for(8);
  const RunResult r = run_experiment(c);
  bool ok = !r.rays.empty();
  std::string detail;
  for (const auto& ray : r.rays) {
    const size_t n = ray.values.size();
    bool increasing = n >= 3 && ray.distances[n - 3] > ray.distances[n - 2] && ray.distances[n - 2] > ray.distances[n - 1];
    increasing = increasing && ray.values[n - 3] < ray.values[n - 2] && ray.values[n - 2] < ray.values[n - 1];
    double far = 0.0, near = NAN;
    for (size_t j = 0; j < n; ++j) {
      if (ray.distances[j] > 0.3) far = std::max(far, ray.values[j]);
      if (ray.distances[j] == 0.05) near = ray.values[j];
    }
    const double ratio = far / near;
    ok = ok && increasing && ratio <= 0.2;
    detail += fmt::format("{}ray {:.2f}: last-3 {} ratio {:.3f}", detail.empty() ? "" : ", ", ray.direction.angle(),
                          increasing ? "increasing" : "NOT increasing", ratio);
  }
  return {ok, detail + " (ratio <= 0.2)"};
}

Outcome slice_regularity() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o = suites(9, [](const ExperimentConfig& c) {
    limit(c.bound_fraction >= 0.5, "bound_fraction");
    limit(c.bound_tau_max >= 200.0, "bound_tau_max");
    for (double t : {10.0, 20.0, 40.0}) {
      limit(std::find(c.lemma_taus.begin(), c.lemma_taus.end(), t) != c.lemma_taus.end(), "lemma_taus");
    }
    limit(c.lemma_taus.front() == 10.0, "lemma_taus");
    std::set<std::string> kinds;
    for (const auto& s : c.shapes) kinds.insert(s.shape.kind_name());
    limit(kinds.size() >= 3, "geometry.item");
  });
  const double elapsed = seconds_since(t0);
  o.pass = o.pass && elapsed < 60.0;
  o.detail += fmt::format("; {:.2f} s", elapsed);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    fmt::print(stderr, "usage: acceptance CONFIG_DIR [criterion...]\n");
    return 2;
  }
  g_dir = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, penetrable_real},
      {2, penetrable_absorbing},
      {3, sign_laws},
      {4, [] { return suites(4, [](const ExperimentConfig& c) { limit(c.two_path_tol <= 1e-2, "two_path_tol"); }); }},
      {5, impenetrable},
      {6, [] {
         return suites(6, [](const ExperimentConfig& c) {
           limit(c.representation_tol <= 1e-2, "representation_tol");
           limit(c.plane_waves >= 8, "plane_waves");
         });
       }},
      {7, [] {
         return suites(7, [](const ExperimentConfig& c) {
           limit(c.ineq_stability <= 0.1, "ineq_stability");
           limit(c.ineq_plane_waves >= 16, "ineq_plane_waves");
           limit(c.ineq_taus == std::vector<double>{4.0, 8.0, 12.0}, "ineq_taus");
         });
       }},
      {8, probe},
      {9, slice_regularity},
      {10, [] {
         return suites(10, [](const ExperimentConfig& c) {
           limit(c.cgo_residual_tol <= 1e-3, "cgo_residual_tol");
           limit(c.cgo_n >= 256, "cgo.n");
         });
       }},
      {11, [] {
         return suites(11, [](const ExperimentConfig& c) {
           limit(c.reflected_spread <= 2.0, "reflected_spread");
           limit(c.reflected_taus == std::vector<double>{5.0, 10.0, 20.0}, "reflected_taus");
         });
       }},
      {12, [] {
         return suites(12, [](const ExperimentConfig& c) {
           limit(c.fem_order >= 1.9, "fem_order");
           limit(c.fem_grids == std::vector<int>{32, 64, 128}, "fem_grids");
         });
       }},
  };

  int failed = 0;
  for (const auto& [n, run] : criteria) {
    if (!only.empty() && !only.count(n)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("error: {}", e.what())};
    }
    fmt::print("criterion {:2}: {}  {}\n", n, o.pass ? "PASS" : "FAIL", o.detail);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
