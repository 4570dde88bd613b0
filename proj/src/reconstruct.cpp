#include "enclab/reconstruct.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "enclab/errors.hpp"

namespace enclab {

namespace {

struct Window {
  std::vector<double> x;  // 2 tau
  std::vector<double> y;  // log|part|
  std::vector<double> tau;
};

Window fit_window(const IndicatorSeries& series, Part part) {
  Window w;
  for (const IndicatorSample* p : fit_samples(series)) {
    const IndicatorSample& s = *p;
    if (s.sign_part(part) == 0) {
      throw NonPositivePart(fmt::format("{} part vanishes at tau = {}", to_string(part), s.tau));
    }
    w.x.push_back(2.0 * s.tau);
    w.y.push_back(s.log_part(part));
    w.tau.push_back(s.tau);
  }
  return w;
}

bool same_direction(Vec2 a, Vec2 b) { return norm(a - b) < 1e-12; }

// Keeps the side x.omega <= h of a convex polygon.
std::vector<Vec2> clip_half_plane(const std::vector<Vec2>& poly, Vec2 omega, double h) {
  std::vector<Vec2> out;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2 p = poly[i], q = poly[(i + 1) % n];
    const double fp = dot(p, omega) - h, fq = dot(q, omega) - h;
    if (fp <= 0.0) out.push_back(p);
    if ((fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0)) out.push_back(p + (fp / (fp - fq)) * (q - p));
  }
  return out;
}

std::vector<Vec2> canonical(std::vector<Vec2> poly, double scale) {
  const double tol = 1e-12 * scale;
  bool changed = true;
  while (changed && poly.size() >= 3) {
    changed = false;
    for (size_t i = 0; i < poly.size(); ++i) {
      const Vec2 prev = poly[(i + poly.size() - 1) % poly.size()];
      const Vec2 cur = poly[i];
      const Vec2 next = poly[(i + 1) % poly.size()];
      if (norm(cur - prev) <= tol || std::abs(cross(cur - prev, next - cur)) <= tol * scale) {
        poly.erase(poly.begin() + static_cast<long>(i));
        changed = true;
        break;
      }
    }
  }
  if (poly.size() < 3) return {};
  const auto first = std::min_element(poly.begin(), poly.end(), [](Vec2 a, Vec2 b) {
    return a.y < b.y || (a.y == b.y && a.x < b.x);
  });
  std::rotate(poly.begin(), first, poly.end());
  return poly;
}

}  // namespace

std::vector<const IndicatorSample*> fit_samples(const IndicatorSeries& series) {
  auto rel = series.reliable();
  if (rel.size() < 3) {
    throw TooFewReliable(fmt::format("{} reliable samples in direction {:.6f}, need 3", rel.size(),
                                     series.direction.angle()));
  }
  const size_t used = std::max<size_t>(3, (rel.size() + 1) / 2);
  rel.erase(rel.begin(), rel.end() - static_cast<long>(used));
  return rel;
}

SupportEstimate extract_support(const IndicatorSeries& series, Part part) {
  const Window w = fit_window(series, part);
  const auto n = static_cast<double>(w.x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < w.x.size(); ++i) {
    mx += w.x[i];
    my += w.y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < w.x.size(); ++i) {
    sxx += (w.x[i] - mx) * (w.x[i] - mx);
    sxy += (w.x[i] - mx) * (w.y[i] - my);
    syy += (w.y[i] - my) * (w.y[i] - my);
  }
  SupportEstimate e;
  e.direction = series.direction;
  e.h_hat = sxy / sxx;
  e.intercept = my - e.h_hat * mx;
  e.n_used = static_cast<int>(w.x.size());
  const double ssr = std::max(0.0, syy - e.h_hat * sxy);
  e.slope_stderr = std::sqrt(ssr / (n - 2.0) / sxx);
  e.r2 = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  return e;
}

TwoParameterFit extract_support_two_parameter(const IndicatorSeries& series, Part part) {
  const Window w = fit_window(series, part);
  const auto n = static_cast<Eigen::Index>(w.x.size());
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<size_t>(i);
    A(i, 0) = w.x[k];
    A(i, 1) = -std::log(w.tau[k]);
    A(i, 2) = 1.0;
    y[i] = w.y[k];
  }
  const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(y);
  return {sol[0], sol[1], sol[2], static_cast<int>(n)};
}

double threshold_characterization(const IndicatorSeries& series, Part part, std::span<const double> t_grid) {
  const auto rel = series.reliable();
  if (rel.size() < 2 || t_grid.empty()) throw NoBracket("need two reliable samples and a nonempty t grid");
  const IndicatorSample& lo = *rel.front();
  const IndicatorSample& hi = *rel.back();
  const double l0 = lo.log_part(part), l1 = hi.log_part(part);
  if (!std::isfinite(l0) || !std::isfinite(l1)) throw NoBracket(fmt::format("{} part vanishes", to_string(part)));
  std::vector<double> grid(t_grid.begin(), t_grid.end());
  std::sort(grid.begin(), grid.end());
  for (double t : grid) {
    const double g0 = l0 - 2.0 * lo.tau * t;
    const double g1 = l1 - 2.0 * hi.tau * t;
    if (g0 - g1 >= std::log(10.0)) return t;
  }
  throw NoBracket(fmt::format("no t in [{}, {}] shows a 10x decay", grid.front(), grid.back()));
}

HullPolygon assemble_hull(std::span<const SupportEstimate> estimates, const BoundingBox& clip) {
  std::vector<Vec2> dirs;
  for (const auto& e : estimates) {
    if (!std::isfinite(e.h_hat)) throw InvalidArgument("support estimate is not finite");
    const Vec2 w = e.direction.omega();
    if (std::none_of(dirs.begin(), dirs.end(), [&](Vec2 d) { return same_direction(d, w); })) dirs.push_back(w);
  }
  if (dirs.size() < 3) throw InvalidArgument(fmt::format("hull needs 3 distinct directions, got {}", dirs.size()));
  if (!(clip.width() > 0.0) || !(clip.height() > 0.0)) throw InvalidArgument("empty clipping box");

  std::vector<Vec2> poly{clip.lo, {clip.hi.x, clip.lo.y}, clip.hi, {clip.lo.x, clip.hi.y}};
  const double scale = std::max(clip.width(), clip.height());
  for (const auto& e : estimates) {
    poly = clip_half_plane(poly, e.direction.omega(), e.h_hat);
    if (poly.size() < 3) break;
  }
  HullPolygon out;
  out.vertices = canonical(std::move(poly), scale);
  if (out.vertices.size() < 3 || polygon_area(out.vertices) <= 1e-14 * scale * scale) {
    throw EmptyIntersection("support half-planes have an empty intersection inside the domain box");
  }
  out.sources.assign(estimates.begin(), estimates.end());
  return out;
}

std::vector<SupportEstimate> polygon_support_estimates(std::span<const Vec2> polygon) {
  std::vector<SupportEstimate> out;
  const size_t n = polygon.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2 a = polygon[i], b = polygon[(i + 1) % n];
    const Vec2 outward{b.y - a.y, a.x - b.x};  // right normal of a counterclockwise edge
    SupportEstimate e;
    e.direction = Direction(outward);
    e.h_hat = dot(a, e.direction.omega());
    e.r2 = 1.0;
    e.n_used = 3;
    out.push_back(e);
  }
  return out;
}

}  // namespace enclab
