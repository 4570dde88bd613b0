#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <iosfwd>
#include <vector>

#include "enclab/common.hpp"
#include "enclab/geometry.hpp"

namespace enclab {

enum class Marker : int { kOuter = 0, kObstacle = 1 };

/// Boundary edge oriented with the mesh domain on its left.
struct BoundaryEdge {
  int a = 0;
  int b = 0;
  Marker marker = Marker::kOuter;
  bool operator==(const BoundaryEdge&) const = default;
};

struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<BoundaryEdge> boundary_edges;

  double triangle_area(int t) const;
  double total_area() const;
  double max_diameter() const;
  double min_area() const;
  bool has_marker(Marker m) const;
  /// Sorted, unique node indices on edges with marker `m`.
  std::vector<int> boundary_nodes(Marker m) const;
  /// Closed polyline of the edges with marker `m`, in edge order, for a single loop.
  std::vector<Vec2> boundary_loop(Marker m) const;
};

/// Throws InvariantViolation unless: indices are in range, every triangle has positive
/// area, every edge is shared by at most two triangles, and the edges with one triangle
/// are exactly the boundary edges, each oriented with that triangle on its left.
void validate(const Mesh& mesh);

/// Uniform (nx+1) x (ny+1) grid on `rect`, each cell split along its lower-left to
/// upper-right diagonal. All boundary edges are OUTER.
Mesh build_uniform(const BoundingBox& rect, int nx, int ny);

/// Steps (hx, hy) when every triangle is half of an axis-aligned hx x hy cell cut along its
/// lower-left to upper-right diagonal (the build_uniform pattern, any node numbering).
std::optional<Vec2> uniform_steps(const Mesh& mesh);

/// Annular O-grid between a disk hole (OBSTACLE) and a convex polygon (OUTER) by linear
/// transfinite interpolation between matched boundary samples. Polygon vertices are always
/// nodes; the outer segments are shared among edges in proportion to length.
Mesh build_ogrid(const Shape& outer, const Shape& hole, int n_r, int n_t);

void write_mesh(const Mesh& mesh, std::ostream& out);
void write_mesh(const Mesh& mesh, const std::filesystem::path& path);
/// Throws ParseError (with line number) on malformed input, InvariantViolation if the
/// parsed mesh fails validate().
Mesh read_mesh(std::istream& in);
Mesh read_mesh(const std::filesystem::path& path);

}  // namespace enclab
