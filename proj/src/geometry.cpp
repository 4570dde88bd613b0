#include "enclab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "enclab/errors.hpp"

namespace enclab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Interval of t satisfying a set of constraints along a line.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool empty() const { return !(lo < hi); }

  // alpha + beta t >= 0
  void clip_linear(double alpha, double beta) {
    constexpr double kTiny = 1e-300;
    if (std::abs(beta) < kTiny) {
      if (alpha < 0.0) hi = lo;  // empty
      return;
    }
    const double root = -alpha / beta;
    if (beta > 0.0) {
      lo = std::max(lo, root);
    } else {
      hi = std::min(hi, root);
    }
  }

  // a t^2 + 2 b t + c <= 0 with a > 0
  void clip_quadratic(double a, double b, double c) {
    const double disc = b * b - a * c;
    if (disc <= 0.0) {
      hi = lo;
      return;
    }
    const double sq = std::sqrt(disc);
    // Stable root pair.
    const double q = -(b + std::copysign(sq, b));
    double r0 = q / a;
    double r1 = (q != 0.0) ? c / q : -r0;
    if (r0 > r1) std::swap(r0, r1);
    lo = std::max(lo, r0);
    hi = std::min(hi, r1);
  }
};

void clip_disk(Interval& iv, Vec2 base, Vec2 tdir, Vec2 center, double radius) {
  const Vec2 d = base - center;
  iv.clip_quadratic(1.0, dot(d, tdir), dot(d, d) - radius * radius);
}

}  // namespace

// ---------------------------------------------------------------- Direction

Direction::Direction(Vec2 v) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidShape("direction vector must be nonzero");
  omega_ = v / n;
  theta_ = perp(omega_);
}

Direction Direction::from_angle(double radians) {
  return Direction(Vec2{std::cos(radians), std::sin(radians)});
}

double Direction::angle() const { return std::atan2(omega_.y, omega_.x); }

std::vector<Direction> uniform_directions(int count, double offset) {
  if (count < 1) throw InvalidArgument("direction count must be positive");
  std::vector<Direction> out;
  out.reserve(static_cast<size_t>(count));
  for (int j = 0; j < count; ++j) out.push_back(Direction::from_angle(offset + 2.0 * kPi * j / count));
  return out;
}

// ---------------------------------------------------------------- Shape

Shape Shape::disk(Vec2 center, double radius) {
  if (!(radius > 0.0)) throw InvalidShape("disk radius must be positive");
  return Shape(Disk{center, radius});
}

Shape Shape::ellipse(Vec2 center, double semi_a, double semi_b, double rotation) {
  if (!(semi_a > 0.0) || !(semi_b > 0.0)) throw InvalidShape("ellipse semiaxes must be positive");
  return Shape(Ellipse{center, semi_a, semi_b, rotation});
}

Shape Shape::polygon(std::vector<Vec2> vertices) {
  const size_t n = vertices.size();
  if (n < 3) throw InvalidShape("polygon needs at least 3 vertices");
  double turning = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const Vec2 a = vertices[i], b = vertices[(i + 1) % n], c = vertices[(i + 2) % n];
    const Vec2 e0 = b - a, e1 = c - b;
    if (!(cross(e0, e1) > 1e-14 * norm(e0) * norm(e1))) {
      throw InvalidShape("polygon vertices must be counterclockwise and strictly convex");
    }
    turning += std::atan2(cross(e0, e1), dot(e0, e1));
  }
  if (std::abs(turning - 2.0 * kPi) > 1e-6) throw InvalidShape("polygon is self-intersecting");
  return Shape(ConvexPolygon{std::move(vertices)});
}

Shape Shape::rectangle(Vec2 lo, Vec2 hi) {
  return polygon({lo, {hi.x, lo.y}, hi, {lo.x, hi.y}});
}

Shape Shape::cone_sector_cap(Vec2 apex, double angle_lo, double angle_hi, double radius) {
  if (!(radius > 0.0)) throw InvalidShape("cone radius must be positive");
  if (!(angle_hi > angle_lo) || !(angle_hi - angle_lo < kPi)) {
    throw InvalidShape("cone aperture must lie in (0, pi)");
  }
  return Shape(ConeSectorCap{apex, angle_lo, angle_hi, radius});
}

Shape Shape::cone_fixture() {
  return cone_sector_cap({0.0, 0.0}, kPi / 4.0, std::atan2(2.0, 1.0), 1.0);
}

std::string Shape::kind_name() const {
  return std::visit(Overloaded{[](const Disk&) { return std::string("disk"); },
                               [](const Ellipse&) { return std::string("ellipse"); },
                               [](const ConvexPolygon&) { return std::string("polygon"); },
                               [](const ConeSectorCap&) { return std::string("cone"); }},
                    kind_);
}

bool Shape::contains(Vec2 p) const {
  return std::visit(
      Overloaded{
          [&](const Disk& d) {
            const Vec2 q = p - d.center;
            return dot(q, q) < d.radius * d.radius;
          },
          [&](const Ellipse& e) {
            const Vec2 q = rotate(p - e.center, -e.rotation);
            const double u = q.x / e.semi_a, v = q.y / e.semi_b;
            return u * u + v * v < 1.0;
          },
          [&](const ConvexPolygon& poly) {
            const auto& vs = poly.vertices;
            for (size_t i = 0; i < vs.size(); ++i) {
              if (!(cross(vs[(i + 1) % vs.size()] - vs[i], p - vs[i]) > 0.0)) return false;
            }
            return true;
          },
          [&](const ConeSectorCap& c) {
            const Vec2 q = p - c.apex;
            if (!(dot(q, q) < c.radius * c.radius)) return false;
            const Vec2 dlo{std::cos(c.angle_lo), std::sin(c.angle_lo)};
            const Vec2 dhi{std::cos(c.angle_hi), std::sin(c.angle_hi)};
            return cross(dlo, q) > 0.0 && cross(q, dhi) > 0.0;
          }},
      kind_);
}

double Shape::area() const {
  return std::visit(Overloaded{[](const Disk& d) { return kPi * d.radius * d.radius; },
                               [](const Ellipse& e) { return kPi * e.semi_a * e.semi_b; },
                               [](const ConvexPolygon& p) { return polygon_area(p.vertices); },
                               [](const ConeSectorCap& c) {
                                 return 0.5 * c.radius * c.radius * (c.angle_hi - c.angle_lo);
                               }},
                    kind_);
}

BoundingBox Shape::bounding_box() const {
  const double xmax = support_function(*this, Direction(Vec2{1, 0}));
  const double xmin = -support_function(*this, Direction(Vec2{-1, 0}));
  const double ymax = support_function(*this, Direction(Vec2{0, 1}));
  const double ymin = -support_function(*this, Direction(Vec2{0, -1}));
  return {{xmin, ymin}, {xmax, ymax}};
}

double Shape::diameter() const {
  if (const auto* poly = std::get_if<ConvexPolygon>(&kind_)) {
    double best = 0.0;
    for (const Vec2& a : poly->vertices)
      for (const Vec2& b : poly->vertices) best = std::max(best, norm(a - b));
    return best;
  }
  double best = 0.0;
  constexpr int kSamples = 720;
  for (int j = 0; j < kSamples; ++j) best = std::max(best, width(*this, Direction::from_angle(kPi * j / kSamples)));
  return best;
}

Shape Shape::translated(Vec2 offset) const {
  return std::visit(
      Overloaded{[&](const Disk& d) { return Shape(Disk{d.center + offset, d.radius}); },
                 [&](const Ellipse& e) {
                   return Shape(Ellipse{e.center + offset, e.semi_a, e.semi_b, e.rotation});
                 },
                 [&](const ConvexPolygon& p) {
                   std::vector<Vec2> vs = p.vertices;
                   for (auto& v : vs) v += offset;
                   return Shape(ConvexPolygon{std::move(vs)});
                 },
                 [&](const ConeSectorCap& c) {
                   return Shape(ConeSectorCap{c.apex + offset, c.angle_lo, c.angle_hi, c.radius});
                 }},
      kind_);
}

std::optional<std::pair<double, double>> Shape::chord(const Direction& dir, double c) const {
  const Vec2 base = dir.omega() * c;
  const Vec2 t = dir.theta();
  Interval iv;
  std::visit(Overloaded{[&](const Disk& d) { clip_disk(iv, base, t, d.center, d.radius); },
                        [&](const Ellipse& e) {
                          const Vec2 q0 = rotate(base - e.center, -e.rotation);
                          const Vec2 qe = rotate(t, -e.rotation);
                          const Vec2 p0{q0.x / e.semi_a, q0.y / e.semi_b};
                          const Vec2 pe{qe.x / e.semi_a, qe.y / e.semi_b};
                          iv.clip_quadratic(dot(pe, pe), dot(p0, pe), dot(p0, p0) - 1.0);
                        },
                        [&](const ConvexPolygon& p) {
                          const auto& vs = p.vertices;
                          for (size_t i = 0; i < vs.size() && !iv.empty(); ++i) {
                            const Vec2 e = vs[(i + 1) % vs.size()] - vs[i];
                            iv.clip_linear(cross(e, base - vs[i]), cross(e, t));
                          }
                        },
                        [&](const ConeSectorCap& cone) {
                          const Vec2 dlo{std::cos(cone.angle_lo), std::sin(cone.angle_lo)};
                          const Vec2 dhi{std::cos(cone.angle_hi), std::sin(cone.angle_hi)};
                          const Vec2 q = base - cone.apex;
                          iv.clip_linear(cross(dlo, q), cross(dlo, t));
                          iv.clip_linear(-cross(dhi, q), -cross(dhi, t));
                          if (!iv.empty()) clip_disk(iv, base, t, cone.apex, cone.radius);
                        }},
             kind_);
  if (iv.empty()) return std::nullopt;
  return std::make_pair(iv.lo, iv.hi);
}

std::vector<double> Shape::kink_depths(const Direction& dir) const {
  std::vector<Vec2> corners;
  if (const auto* poly = std::get_if<ConvexPolygon>(&kind_)) {
    corners = poly->vertices;
  } else if (const auto* cone = std::get_if<ConeSectorCap>(&kind_)) {
    corners = {cone->apex,
               cone->apex + Vec2{std::cos(cone->angle_lo), std::sin(cone->angle_lo)} * cone->radius,
               cone->apex + Vec2{std::cos(cone->angle_hi), std::sin(cone->angle_hi)} * cone->radius};
  }
  const double h = support_function(*this, dir);
  const double w = width(*this, dir);
  std::vector<double> out;
  for (const Vec2& v : corners) {
    const double s = h - dot(v, dir.omega());
    if (s > 1e-12 * w && s < w * (1.0 - 1e-12)) out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [&](double a, double b) { return b - a < 1e-12 * w; }),
            out.end());
  return out;
}

std::vector<Vec2> Shape::boundary_polyline(int segments) const {
  if (segments < 3) throw InvalidArgument("boundary polyline needs at least 3 segments");
  std::vector<Vec2> out;
  std::visit(Overloaded{[&](const Disk& d) {
                          for (int i = 0; i < segments; ++i) {
                            const double a = 2.0 * kPi * i / segments;
                            out.push_back(d.center + Vec2{std::cos(a), std::sin(a)} * d.radius);
                          }
                        },
                        [&](const Ellipse& e) {
                          for (int i = 0; i < segments; ++i) {
                            const double a = 2.0 * kPi * i / segments;
                            out.push_back(e.center +
                                          rotate({e.semi_a * std::cos(a), e.semi_b * std::sin(a)}, e.rotation));
                          }
                        },
                        [&](const ConvexPolygon& p) { out = p.vertices; },
                        [&](const ConeSectorCap& c) {
                          out.push_back(c.apex);
                          for (int i = 0; i <= segments; ++i) {
                            const double a = c.angle_lo + (c.angle_hi - c.angle_lo) * i / segments;
                            out.push_back(c.apex + Vec2{std::cos(a), std::sin(a)} * c.radius);
                          }
                        }},
             kind_);
  return out;
}

// ---------------------------------------------------------------- operations

double support_function(const Shape& shape, const Direction& dir) {
  const Vec2 w = dir.omega();
  return std::visit(
      Overloaded{[&](const Disk& d) { return dot(d.center, w) + d.radius; },
                 [&](const Ellipse& e) {
                   const Vec2 q = rotate(w, -e.rotation);
                   return dot(e.center, w) + std::hypot(e.semi_a * q.x, e.semi_b * q.y);
                 },
                 [&](const ConvexPolygon& p) {
                   double h = -std::numeric_limits<double>::infinity();
                   for (const Vec2& v : p.vertices) h = std::max(h, dot(v, w));
                   return h;
                 },
                 [&](const ConeSectorCap& c) {
                   const Vec2 dlo{std::cos(c.angle_lo), std::sin(c.angle_lo)};
                   const Vec2 dhi{std::cos(c.angle_hi), std::sin(c.angle_hi)};
                   double h = std::max({0.0, c.radius * dot(dlo, w), c.radius * dot(dhi, w)});
                   // The arc attains the radius when omega points into the aperture.
                   if (cross(dlo, w) >= 0.0 && cross(w, dhi) >= 0.0) h = c.radius;
                   return dot(c.apex, w) + h;
                 }},
      shape.kind());
}

double width(const Shape& shape, const Direction& dir) {
  return support_function(shape, dir) + support_function(shape, Direction(-dir.omega()));
}

double slice_measure(const Shape& shape, const Direction& dir, double s) {
  if (!(s >= 0.0)) throw InvalidArgument("slice depth must be nonnegative");
  const auto ch = shape.chord(dir, support_function(shape, dir) - s);
  if (!ch) return 0.0;
  return std::max(0.0, ch->second - ch->first);
}

SliceProfile estimate_p_regularity(const Shape& shape, const Direction& dir, double s_max, int n) {
  if (n < 8) throw InvalidArgument("p-regularity fit needs n >= 8");
  if (!(s_max > 0.0) || !(s_max < shape.diameter())) {
    throw InvalidArgument("s_max must lie in (0, diameter)");
  }
  SliceProfile prof;
  prof.omega = dir;
  const double s_min = s_max * 1e-3;
  std::vector<double> lx, ly;
  int zeros = 0;
  for (int i = 0; i < n; ++i) {
    const double s = s_min * std::pow(s_max / s_min, static_cast<double>(i) / (n - 1));
    const double mu = slice_measure(shape, dir, s);
    prof.depths.push_back(s);
    prof.measures.push_back(mu);
    if (mu > 0.0) {
      lx.push_back(std::log(s));
      ly.push_back(std::log(mu));
    } else {
      ++zeros;
    }
  }
  if (2 * zeros >= n || lx.size() < 2) throw DegenerateSlices("at least half of the slices are empty");

  const double m = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < lx.size(); ++i) { mx += lx[i]; my += ly[i]; }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  const double slope = sxy / sxx;
  prof.fitted_p = 1.0 + slope;
  // Constant slices give syy == 0 and a perfect fit.
  prof.fit_r2 = syy > 1e-300 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return prof;
}

double exponential_moment(const Shape& shape, const Direction& dir, double rate) {
  if (!(rate >= 0.0)) throw InvalidArgument("decay rate must be nonnegative");
  const double w = width(shape, dir);
  std::vector<double> breaks{0.0};
  for (double k : shape.kink_depths(dir)) breaks.push_back(k);
  // Resolve the boundary layer of exp(-rate s) with extra breakpoints.
  if (rate > 0.0) {
    for (double m : {2.0, 8.0, 32.0}) {
      const double s = m / rate;
      if (s < w) breaks.push_back(s);
    }
  }
  breaks.push_back(w);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [&](double a, double b) { return b - a < 1e-14 * w; }),
               breaks.end());

  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0, total_err = 0.0;
  for (size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i], b = breaks[i + 1];
    // s = a + (b-a)(1 - cos(pi u))/2 removes square-root endpoint behaviour.
    auto f = [&](double u) {
      const double s = a + 0.5 * (b - a) * (1.0 - std::cos(kPi * u));
      const double ds = 0.5 * (b - a) * kPi * std::sin(kPi * u);
      return slice_measure(shape, dir, std::min(s, w)) * std::exp(-rate * s) * ds;
    };
    double err = 0.0;
    const double piece = Quad::integrate(f, 0.0, 1.0, 20, 1e-12, &err);
    total += piece;
    total_err += err;
  }
  if (!std::isfinite(total) || total_err > 1e-6 * std::abs(total) + 1e-300) {
    throw QuadratureNotConverged("slice integral error estimate " + std::to_string(total_err) +
                                 " exceeds tolerance for value " + std::to_string(total));
  }
  return total;
}

double l1_l2_ratio(const Shape& shape, const Direction& dir, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("tau must be nonnegative");
  // Both norms carry the common factor exp(tau h), which cancels.
  const double l1 = exponential_moment(shape, dir, tau);
  const double l2sq = exponential_moment(shape, dir, 2.0 * tau);
  return l1 / std::sqrt(l2sq);
}

double weighted_l2_lower_bound(const Shape& shape, const Direction& dir, double tau, double p) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (!(p >= 1.0)) throw InvalidArgument("p must be >= 1");
  return std::sqrt(exponential_moment(shape, dir, 2.0 * tau)) * std::pow(tau, 0.5 * p);
}

double polygon_area(std::span<const Vec2> vertices) {
  double a = 0.0;
  for (size_t i = 0; i < vertices.size(); ++i) a += cross(vertices[i], vertices[(i + 1) % vertices.size()]);
  return 0.5 * a;
}

namespace {

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + ab * t));
}

double distance_to_polyline(Vec2 p, std::span<const Vec2> poly) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < poly.size(); ++i) {
    best = std::min(best, point_segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
  }
  return best;
}

std::vector<Vec2> densify(std::span<const Vec2> poly, double spacing) {
  std::vector<Vec2> out;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const int n = std::max(1, static_cast<int>(std::ceil(norm(b - a) / spacing)));
    for (int j = 0; j < n; ++j) out.push_back(a + (b - a) * (static_cast<double>(j) / n));
  }
  return out;
}

}  // namespace

double hausdorff_distance(std::span<const Vec2> polygon, const Shape& shape) {
  const std::vector<Vec2> boundary = shape.boundary_polyline(4096);
  const double spacing = shape.diameter() / 2048.0;
  double h = 0.0;
  for (const Vec2& p : densify(polygon, spacing)) h = std::max(h, distance_to_polyline(p, boundary));
  for (const Vec2& p : densify(boundary, spacing)) h = std::max(h, distance_to_polyline(p, polygon));
  return h;
}

}  // namespace enclab
