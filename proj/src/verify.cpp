#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "enclab/errors.hpp"
#include "enclab/experiment.hpp"
#include "parallel_for.hpp"

namespace enclab {

namespace {

using detail::parallel_for;

// Exponential fields in the representation checks are scaled by e^{-tau shift} with the shift
// this far past the support value, so they stay O(1) on the mesh.
constexpr double kFieldShiftMargin = 0.3;
// Direction of the manufactured plane wave in the FEM convergence suite.
constexpr double kPlaneWaveAngle = 0.3;

Check below(const char* suite, std::string name, double measured, double threshold) {
  return {suite, std::move(name), measured, threshold, std::isfinite(measured) && measured < threshold};
}

Check at_least(const char* suite, std::string name, double measured, double threshold) {
  return {suite, std::move(name), measured, threshold, std::isfinite(measured) && measured >= threshold};
}

double rel_gap(double a, double b) {
  const double m = std::max(std::abs(a), std::abs(b));
  return m == 0.0 ? 0.0 : std::abs(a - b) / m;
}

std::vector<Check> two_path(const ExperimentConfig& config, int jobs) {
  std::vector<Check> out;
  const auto mesh = uniform_mesh(config);
  const auto dirs = config.sweep_directions();
  for (const auto& pc : config.cases) {
    CgoSource source = CgoSource::exponential(case_background(pc));
    source.discrete_probes = config.discrete_probes;
    const PenetrableModel model(mesh, case_potentials(config, pc, *mesh), source);
    std::vector<double> gaps(dirs.size(), 0.0);
    std::vector<int> counts(dirs.size(), 0);
    parallel_for(static_cast<int>(dirs.size()), jobs, [&](int i) {
      const auto k = static_cast<size_t>(i);
      for (double tau : config.taus) {
        const IndicatorSample a = model.indicator(dirs[k], tau);
        if (!a.reliable) continue;
        const IndicatorSample b = alessandrini_oracle(model, dirs[k], tau);
        gaps[k] = std::max(gaps[k], std::abs(a.scaled - b.scaled) / std::abs(b.scaled));
        ++counts[k];
      }
    });
    int used = 0;
    for (int c : counts) used += c;
    out.push_back(below("TWO_PATH", fmt::format("max_rel_gap:{}", pc.label), *std::max_element(gaps.begin(), gaps.end()),
                        config.two_path_tol));
    out.push_back(at_least("TWO_PATH", fmt::format("reliable_samples:{}", pc.label), used, 1.0));
  }
  return out;
}

std::vector<Check> representation(const ExperimentConfig& config, int jobs) {
  std::vector<Check> out;
  const auto mesh = exterior_mesh(config);
  for (const auto& pc : config.cases) {
    const ImpenetrableModel model(mesh, config.k, Impedance::constant(mesh->nodes.size(), pc.lambda));
    const auto family = plane_wave_family(config.k, config.plane_waves);
    std::vector<double> gaps(family.size());
    parallel_for(static_cast<int>(family.size()), jobs, [&](int i) {
      const auto& f = family[static_cast<size_t>(i)];
      const RepresentationTerms t = representation_check(model, f.value, f.gradient);
      gaps[static_cast<size_t>(i)] = rel_gap(t.lhs, t.rhs());
    });
    out.push_back(below("REPRESENTATION", fmt::format("max_rel_gap:{}", pc.label),
                        *std::max_element(gaps.begin(), gaps.end()), config.representation_tol));
  }
  return out;
}

std::vector<ProbeField> inequality_family(const ExperimentConfig& config) {
  const Shape& d = config.require_obstacle();
  auto family = plane_wave_family(config.k, config.ineq_plane_waves);
  for (const Direction& dir : config.sweep_directions()) {
    auto cgo = cgo_family(dir, config.ineq_taus, config.k, support_function(d, dir) + kFieldShiftMargin);
    family.insert(family.end(), cgo.begin(), cgo.end());
  }
  return family;
}

std::vector<Check> inequality(const ExperimentConfig& config) {
  std::vector<Check> out;
  const auto family = inequality_family(config);
  const auto coarse = exterior_mesh(config);
  const auto fine = exterior_mesh(config, config.refine);
  for (const auto& pc : config.cases) {
    InequalityReport r[2];
    const std::shared_ptr<const Mesh>* meshes[2] = {&coarse, &fine};
    for (int m = 0; m < 2; ++m) {
      const auto& mesh = *meshes[m];
      const ImpenetrableModel model(mesh, config.k, Impedance::constant(mesh->nodes.size(), pc.lambda));
      r[m] = inequality_check(model, family, config.c2_cap);
    }
    const double inf = std::numeric_limits<double>::infinity();
    out.push_back(below("INEQ_1_20", fmt::format("sup_m_over_c:{}", pc.label), r[0].sup_m_over_c, inf));
    out.push_back(below("INEQ_1_20", fmt::format("sup_stability:{}", pc.label),
                        std::abs(r[1].sup_m_over_c - r[0].sup_m_over_c) / std::abs(r[0].sup_m_over_c),
                        config.ineq_stability));
    for (int m = 0; m < 2; ++m) {
      Check c{"INEQ_1_20", fmt::format("c1:{}:refine{}", pc.label, m == 0 ? 1 : config.refine), r[m].c1, 0.0,
              r[m].feasible && r[m].c1 > 0.0};
      out.push_back(c);
      out.push_back({"INEQ_1_20", fmt::format("c2:{}:refine{}", pc.label, m == 0 ? 1 : config.refine), r[m].c2,
                     config.c2_cap, r[m].feasible && r[m].c2 <= config.c2_cap});
    }
  }
  return out;
}

std::vector<Check> lemma_ratio(const ExperimentConfig& config) {
  if (config.shapes.empty()) throw ConfigError("geometry.item: LEMMA_3_2 needs at least one shape");
  std::vector<Check> out;
  for (const auto& item : config.shapes) {
    for (double tau : config.lemma_taus) {
      const double r = l1_l2_ratio(item.shape, item.direction, tau);
      const double r4 = l1_l2_ratio(item.shape, item.direction, 4.0 * tau);
      Check c = below("LEMMA_3_2", fmt::format("ratio_4tau_over_tau:{}:tau{}", item.label, tau), r4 / r, 1.0);
      c.pass = c.pass && r > 0.0;
      out.push_back(c);
    }
  }
  return out;
}

std::vector<Check> weighted_bound(const ExperimentConfig& config) {
  if (config.shapes.empty()) throw ConfigError("geometry.item: BOUND_3_8 needs at least one shape");
  if (config.lemma_taus.empty()) throw ConfigError("verify.lemma_taus: BOUND_3_8 needs a starting tau");
  std::vector<Check> out;
  const double t0 = config.lemma_taus.front();
  constexpr int kPoints = 64;
  for (const auto& item : config.shapes) {
    const double w = width(item.shape, item.direction);
    const double p = estimate_p_regularity(item.shape, item.direction, config.s_max_fraction * w, config.slices).fitted_p;
    const double b0 = weighted_l2_lower_bound(item.shape, item.direction, t0, p);
    double lowest = INFINITY;
    for (int i = 0; i < kPoints; ++i) {
      const double tau = t0 * std::pow(config.bound_tau_max / t0, static_cast<double>(i) / (kPoints - 1));
      lowest = std::min(lowest, weighted_l2_lower_bound(item.shape, item.direction, tau, p) / b0);
    }
    out.push_back(at_least("BOUND_3_8", fmt::format("min_bound_ratio:{}:p{:.3f}", item.label, p), lowest,
                           config.bound_fraction));
  }
  return out;
}

std::vector<Check> cgo_residual_suite(const ExperimentConfig& config, int jobs) {
  std::vector<Check> out;
  const std::vector<double> taus = config.taus.empty() ? std::vector<double>{10.0, 20.0, 40.0} : config.taus;
  const Direction dir = Direction::from_angle(config.cgo_direction);

  const PotentialGrid zero = PotentialGrid::sample(config.domain, config.cgo_n, [](Vec2) { return cplx(0.0); });
  const CGOField z = solve_faddeev(zero, dir, taus.front(), config.faddeev);
  out.push_back({"CGO_RESIDUAL", "zero_potential_sup_psi", z.sup_psi, 0.0, z.sup_psi == 0.0});
  const double zr = cgo_residual(z, zero);
  out.push_back({"CGO_RESIDUAL", "zero_potential_residual", zr, 0.0, zr == 0.0});

  for (const auto& pc : config.cases) {
    const PotentialGrid grid = cgo_potential(config, pc);
    std::vector<double> sup(taus.size()), res(taus.size());
    parallel_for(static_cast<int>(taus.size()), jobs, [&](int i) {
      const auto k = static_cast<size_t>(i);
      const CGOField f = solve_faddeev(grid, dir, taus[k], config.faddeev);
      sup[k] = f.sup_psi;
      res[k] = cgo_residual(f, grid);
    });
    for (size_t k = 0; k < taus.size(); ++k) {
      if (k > 0) {
        out.push_back(below("CGO_RESIDUAL", fmt::format("sup_psi_decrease:{}:tau{}", pc.label, taus[k]), sup[k],
                            sup[k - 1]));
      }
      out.push_back(below("CGO_RESIDUAL", fmt::format("residual:{}:tau{}", pc.label, taus[k]), res[k],
                          config.cgo_residual_tol));
    }
  }
  return out;
}

std::vector<Check> reflected_bounds(const ExperimentConfig& config, int jobs) {
  std::vector<Check> out;
  const Shape& d = config.require_obstacle();
  const auto& taus = config.reflected_taus;
  if (taus.size() < 2) throw ConfigError("verify.reflected_taus: needs at least two values");
  const auto ext = exterior_mesh(config);
  const auto uni = uniform_mesh(config);
  const auto dirs = config.sweep_directions();
  const double growth_floor = 0.5 * taus.back() / taus.front();
  for (const auto& pc : config.cases) {
    const ImpenetrableModel im(ext, config.k, Impedance::constant(ext->nodes.size(), pc.lambda));
    const PotentialField pot = case_potentials(config, pc, *uni);
    CgoSource source = CgoSource::exponential(case_background(pc));
    source.discrete_probes = config.discrete_probes;
    const PenetrableModel pm(uni, pot, source);

    struct Row {
      std::vector<double> r1, r2, grad;
    };
    std::vector<Row> rows(dirs.size());
    parallel_for(static_cast<int>(dirs.size()), jobs, [&](int i) {
      const Direction& dir = dirs[static_cast<size_t>(i)];
      Row& row = rows[static_cast<size_t>(i)];
      const double shift = support_function(d, dir) + kFieldShiftMargin;
      for (double tau : taus) {
        const CGOField f = make_exp_cgo(dir, tau, config.k);
        const ScalarFn v = [&](Vec2 x) { return f.value_scaled(x, shift); };
        const GradFn g = [&](Vec2 x) { return f.gradient_scaled(x, shift); };
        row.r1.push_back(reflected_ratio_impenetrable(im.reflected(v, g), im.hole_polygon(), v).ratio);
        const auto [a, b] = im.interior_norms(v, g);
        row.grad.push_back(std::sqrt(a / b));
        const auto probes = pm.probes(dir, tau);
        row.r2.push_back(
            reflected_ratio_penetrable(pm.reflected(probes.v), pot.V, pm.background(probes.v).coeffs).ratio);
      }
    });
    for (size_t i = 0; i < rows.size(); ++i) {
      const Row& row = rows[i];
      const auto [lo, hi] = std::minmax_element(row.r1.begin(), row.r1.end());
      out.push_back(below("LEMMA_3_1", fmt::format("r1_spread:{}:dir{}", pc.label, i), *hi / *lo,
                          config.reflected_spread));
      out.push_back(at_least("LEMMA_3_1", fmt::format("grad_over_l2_growth:{}:dir{}", pc.label, i),
                             row.grad.back() / row.grad.front(), growth_floor));
      out.push_back({"LEMMA_3_1", fmt::format("r2_bounded:{}:dir{}", pc.label, i),
                     *std::max_element(row.r2.begin(), row.r2.end()) / row.r2.front(), 2.0,
                     *std::max_element(row.r2.begin(), row.r2.end()) <= 2.0 * row.r2.front()});
    }
  }
  return out;
}

std::vector<Check> fem_convergence(const ExperimentConfig& config) {
  std::vector<Check> out;
  const Vec2 dir{std::cos(kPlaneWaveAngle), std::sin(kPlaneWaveAngle)};
  const double k = config.k;
  const ScalarFn exact = [=](Vec2 x) { return std::exp(kI * k * dot(dir, x)); };
  std::vector<double> err;
  for (int n : config.fem_grids) {
    ExperimentConfig c = config;
    c.n = n;
    const auto mesh = uniform_mesh(c);
    const auto pot = PotentialField::constant(mesh->nodes.size(), k * k);
    const FEField u = solve_dirichlet(mesh, pot, interpolate(*mesh, exact));
    err.push_back(l2_error(*mesh, u.coeffs, exact));
  }
  for (size_t i = 0; i + 1 < err.size(); ++i) {
    const double order = std::log(err[i] / err[i + 1]) /
                         std::log(static_cast<double>(config.fem_grids[i + 1]) / config.fem_grids[i]);
    out.push_back(at_least("FEM_CONVERGENCE", fmt::format("l2_order:{}-{}", config.fem_grids[i], config.fem_grids[i + 1]),
                           order, config.fem_order));
  }
  return out;
}

}  // namespace

const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> names{"INEQ_1_20", "REPRESENTATION", "LEMMA_3_1", "LEMMA_3_2",
                                              "BOUND_3_8", "CGO_RESIDUAL",   "TWO_PATH",  "FEM_CONVERGENCE"};
  return names;
}

std::vector<Check> run_suite(const ExperimentConfig& config, const std::string& suite, int jobs) {
  if (suite == "TWO_PATH") return two_path(config, jobs);
  if (suite == "REPRESENTATION") return representation(config, jobs);
  if (suite == "INEQ_1_20") return inequality(config);
  if (suite == "LEMMA_3_2") return lemma_ratio(config);
  if (suite == "BOUND_3_8") return weighted_bound(config);
  if (suite == "CGO_RESIDUAL") return cgo_residual_suite(config, jobs);
  if (suite == "LEMMA_3_1") return reflected_bounds(config, jobs);
  if (suite == "FEM_CONVERGENCE") return fem_convergence(config);
  throw ConfigError(fmt::format("suite: unknown suite \"{}\"", suite));
}

}  // namespace enclab
