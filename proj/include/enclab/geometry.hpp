#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "enclab/common.hpp"

namespace enclab {

/// Unit direction omega together with theta, its +90 degree rotation.
class Direction {
 public:
  Direction() : Direction(Vec2{1.0, 0.0}) {}
  /// Normalizes `v`; throws InvalidShape for a zero vector.
  explicit Direction(Vec2 v);
  static Direction from_angle(double radians);

  Vec2 omega() const { return omega_; }
  Vec2 theta() const { return theta_; }
  double angle() const;

 private:
  Vec2 omega_;
  Vec2 theta_;
};

/// `count` directions at angles offset + 2*pi*j/count.
std::vector<Direction> uniform_directions(int count, double offset = 0.0);

struct Disk {
  Vec2 center;
  double radius = 1.0;
};

struct Ellipse {
  Vec2 center;
  double semi_a = 1.0;  // along the rotated x axis
  double semi_b = 1.0;
  double rotation = 0.0;
};

/// Strictly convex, counterclockwise.
struct ConvexPolygon {
  std::vector<Vec2> vertices;
};

/// Open sector {apex + rho (cos phi, sin phi) : angle_lo < phi < angle_hi, 0 < rho < radius}.
struct ConeSectorCap {
  Vec2 apex;
  double angle_lo = 0.0;
  double angle_hi = 0.0;
  double radius = 1.0;
};

struct BoundingBox {
  Vec2 lo;
  Vec2 hi;
  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
};

/// Open convex 2D set. Construction goes through the factories, which validate invariants.
class Shape {
 public:
  using Kind = std::variant<Disk, Ellipse, ConvexPolygon, ConeSectorCap>;

  static Shape disk(Vec2 center, double radius);
  static Shape ellipse(Vec2 center, double semi_a, double semi_b, double rotation);
  static Shape polygon(std::vector<Vec2> vertices);
  static Shape rectangle(Vec2 lo, Vec2 hi);
  static Shape cone_sector_cap(Vec2 apex, double angle_lo, double angle_hi, double radius);
  /// {x1 < x2 < 2 x1, 0 < x1} intersected with the open unit disk.
  static Shape cone_fixture();

  const Kind& kind() const { return kind_; }
  std::string kind_name() const;

  bool contains(Vec2 p) const;
  double area() const;
  BoundingBox bounding_box() const;
  double diameter() const;
  Shape translated(Vec2 offset) const;

  /// Parameter interval [t0, t1] of {c*omega + t*theta} inside the closure, if nonempty.
  std::optional<std::pair<double, double>> chord(const Direction& dir, double c) const;

  /// Depths s in (0, width) where the slice length may fail to be smooth
  /// (vertex depths); used to split the slice integrals into smooth pieces.
  std::vector<double> kink_depths(const Direction& dir) const;

  /// Closed counterclockwise boundary polyline (last point not repeated).
  std::vector<Vec2> boundary_polyline(int segments) const;

 private:
  explicit Shape(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

double support_function(const Shape& shape, const Direction& dir);
/// h(omega) + h(-omega).
double width(const Shape& shape, const Direction& dir);

/// 1D measure of D intersected with the line x.omega = h(omega) - s. Throws for s < 0.
double slice_measure(const Shape& shape, const Direction& dir, double s);

struct SliceProfile {
  Direction omega;
  std::vector<double> depths;
  std::vector<double> measures;
  double fitted_p = 1.0;
  double fit_r2 = 0.0;
};

/// Log-log least-squares fit of slice length against depth over (0, s_max];
/// fitted_p = 1 + slope. Depths are geometrically spaced from s_max/1000.
SliceProfile estimate_p_regularity(const Shape& shape, const Direction& dir, double s_max, int n);

/// int_D exp(-rate * (h(omega) - x.omega)) dx, by Fubini over slices.
double exponential_moment(const Shape& shape, const Direction& dir, double rate);

/// ||v0||_L1(D) / ||v0||_L2(D) for v0 = exp(tau x.omega).
double l1_l2_ratio(const Shape& shape, const Direction& dir, double tau);

/// exp(-tau h) ||v0||_L2(D) * tau^(p/2).
double weighted_l2_lower_bound(const Shape& shape, const Direction& dir, double tau, double p);

/// Symmetric Hausdorff distance between a closed polygon and the boundary of `shape`,
/// both sampled densely.
double hausdorff_distance(std::span<const Vec2> polygon, const Shape& shape);

double polygon_area(std::span<const Vec2> vertices);

}  // namespace enclab
