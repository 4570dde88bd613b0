#pragma once

#include <span>
#include <vector>

#include "enclab/geometry.hpp"
#include "enclab/indicator.hpp"

namespace enclab {

struct SupportEstimate {
  Direction direction;
  double h_hat = 0.0;
  double slope_stderr = 0.0;
  double r2 = 0.0;
  int n_used = 0;
  double intercept = 0.0;
};

/// The fit window: the top half (at least 3) of the reliable samples. Throws TooFewReliable.
std::vector<const IndicatorSample*> fit_samples(const IndicatorSeries& series);

/// OLS of log|part(I)| against 2 tau over fit_samples.
/// Throws TooFewReliable, NonPositivePart when the part is zero on the fit window.
SupportEstimate extract_support(const IndicatorSeries& series, Part part);

/// log|part(I)| = 2 h tau - p log tau + c on the same window; diagnostic only.
struct TwoParameterFit {
  double h_hat = 0.0;
  double p = 0.0;
  double c = 0.0;
  int n_used = 0;
};
TwoParameterFit extract_support_two_parameter(const IndicatorSeries& series, Part part);

/// Smallest t in `t_grid` for which |e^{-2 tau t} part(I)| drops by at least 10x between the
/// first and last reliable samples. Throws NoBracket.
double threshold_characterization(const IndicatorSeries& series, Part part, std::span<const double> t_grid);

struct HullPolygon {
  std::vector<Vec2> vertices;  // counterclockwise, starting at the lowest (then leftmost) vertex
  std::vector<SupportEstimate> sources;
};

/// Intersection of {x.omega_j <= h_j} with `clip`. Needs at least 3 distinct directions.
/// Throws EmptyIntersection.
HullPolygon assemble_hull(std::span<const SupportEstimate> estimates, const BoundingBox& clip);

/// One estimate per edge of a convex polygon (outward normal, exact support value).
std::vector<SupportEstimate> polygon_support_estimates(std::span<const Vec2> polygon);

}  // namespace enclab
