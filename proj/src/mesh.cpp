#include "enclab/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "enclab/errors.hpp"

namespace enclab {

// ---------------------------------------------------------------- queries

double Mesh::triangle_area(int t) const {
  const auto& tri = triangles[static_cast<size_t>(t)];
  return signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
}

double Mesh::total_area() const {
  double a = 0.0;
  for (size_t t = 0; t < triangles.size(); ++t) a += triangle_area(static_cast<int>(t));
  return a;
}

double Mesh::max_diameter() const {
  double d = 0.0;
  for (const auto& tri : triangles) {
    for (int e = 0; e < 3; ++e) d = std::max(d, norm(nodes[tri[e]] - nodes[tri[(e + 1) % 3]]));
  }
  return d;
}

double Mesh::min_area() const {
  double a = std::numeric_limits<double>::infinity();
  for (size_t t = 0; t < triangles.size(); ++t) a = std::min(a, triangle_area(static_cast<int>(t)));
  return a;
}

bool Mesh::has_marker(Marker m) const {
  return std::any_of(boundary_edges.begin(), boundary_edges.end(),
                     [&](const BoundaryEdge& e) { return e.marker == m; });
}

std::vector<int> Mesh::boundary_nodes(Marker m) const {
  std::vector<int> out;
  for (const auto& e : boundary_edges) {
    if (e.marker != m) continue;
    out.push_back(e.a);
    out.push_back(e.b);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Vec2> Mesh::boundary_loop(Marker m) const {
  std::map<int, int> next;
  int start = -1;
  for (const auto& e : boundary_edges) {
    if (e.marker != m) continue;
    next[e.a] = e.b;
    if (start < 0) start = e.a;
  }
  std::vector<Vec2> loop;
  if (start < 0) return loop;
  int cur = start;
  do {
    loop.push_back(nodes[static_cast<size_t>(cur)]);
    const auto it = next.find(cur);
    if (it == next.end()) throw InvariantViolation("boundary loop is not closed");
    cur = it->second;
  } while (cur != start && loop.size() <= next.size());
  if (cur != start) throw InvariantViolation("boundary loop is not closed");
  return loop;
}

void validate(const Mesh& mesh) {
  const int n = static_cast<int>(mesh.nodes.size());
  for (const Vec2& p : mesh.nodes) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvariantViolation("non-finite node coordinate");
  }
  // Directed edge -> owning triangle count.
  std::map<std::pair<int, int>, int> directed;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int v : tri) {
      if (v < 0 || v >= n) throw InvariantViolation("triangle " + std::to_string(t) + " has an out-of-range node");
    }
    if (!(mesh.triangle_area(static_cast<int>(t)) > 0.0)) {
      throw InvariantViolation("triangle " + std::to_string(t) + " has nonpositive signed area");
    }
    for (int e = 0; e < 3; ++e) {
      if (++directed[{tri[e], tri[(e + 1) % 3]}] > 1) {
        throw InvariantViolation("edge used twice with the same orientation");
      }
    }
  }
  std::map<std::pair<int, int>, bool> open;  // directed edges without a twin
  for (const auto& [edge, count] : directed) {
    if (!directed.contains({edge.second, edge.first})) open[edge] = false;
  }
  for (const auto& be : mesh.boundary_edges) {
    if (be.a < 0 || be.a >= n || be.b < 0 || be.b >= n) {
      throw InvariantViolation("boundary edge has an out-of-range node");
    }
    const auto it = open.find({be.a, be.b});
    if (it == open.end()) {
      throw InvariantViolation("boundary edge (" + std::to_string(be.a) + ", " + std::to_string(be.b) +
                               ") is not a boundary edge of the triangulation with the domain on its left");
    }
    if (it->second) throw InvariantViolation("duplicate boundary edge");
    it->second = true;
  }
  for (const auto& [edge, seen] : open) {
    if (!seen) {
      throw InvariantViolation("unmarked boundary edge (" + std::to_string(edge.first) + ", " +
                               std::to_string(edge.second) + ")");
    }
  }
}

// ---------------------------------------------------------------- generators

Mesh build_uniform(const BoundingBox& rect, int nx, int ny) {
  if (nx < 1 || ny < 1) throw InvalidArgument("grid counts must be positive");
  if (!(rect.width() > 0.0) || !(rect.height() > 0.0)) throw InvalidArgument("rectangle must have positive size");
  Mesh m;
  m.nodes.reserve(static_cast<size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      m.nodes.push_back({rect.lo.x + rect.width() * i / nx, rect.lo.y + rect.height() * j / ny});
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  m.triangles.reserve(static_cast<size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  for (int i = 0; i < nx; ++i) m.boundary_edges.push_back({id(i, 0), id(i + 1, 0), Marker::kOuter});
  for (int j = 0; j < ny; ++j) m.boundary_edges.push_back({id(nx, j), id(nx, j + 1), Marker::kOuter});
  for (int i = nx; i > 0; --i) m.boundary_edges.push_back({id(i, ny), id(i - 1, ny), Marker::kOuter});
  for (int j = ny; j > 0; --j) m.boundary_edges.push_back({id(0, j), id(0, j - 1), Marker::kOuter});
  return m;
}

std::optional<Vec2> uniform_steps(const Mesh& mesh) {
  if (mesh.triangles.empty()) return std::nullopt;
  double hx = 0.0, hy = 0.0;
  for (const auto& tri : mesh.triangles) {
    Vec2 p[3];
    for (int k = 0; k < 3; ++k) p[k] = mesh.nodes[static_cast<size_t>(tri[static_cast<size_t>(k)])];
    const Vec2 lo{std::min({p[0].x, p[1].x, p[2].x}), std::min({p[0].y, p[1].y, p[2].y})};
    const Vec2 hi{std::max({p[0].x, p[1].x, p[2].x}), std::max({p[0].y, p[1].y, p[2].y})};
    if (hx == 0.0) {
      hx = hi.x - lo.x;
      hy = hi.y - lo.y;
    }
    const double tol = 1e-9 * std::max(hx, hy);
    if (std::abs(hi.x - lo.x - hx) > tol || std::abs(hi.y - lo.y - hy) > tol) return std::nullopt;
    auto has = [&](Vec2 q) {
      return std::any_of(std::begin(p), std::end(p), [&](Vec2 v) { return norm(v - q) <= tol; });
    };
    // both halves contain the diagonal; the third vertex is the lower-right or upper-left corner
    if (!has(lo) || !has(hi)) return std::nullopt;
    if (!has({hi.x, lo.y}) && !has({lo.x, hi.y})) return std::nullopt;
  }
  return Vec2{hx, hy};
}

namespace {

// Segments per polygon edge: proportional to length, at least one each, summing to n.
std::vector<int> allocate_segments(const std::vector<double>& lengths, int n) {
  const double perimeter = [&] {
    double p = 0.0;
    for (double l : lengths) p += l;
    return p;
  }();
  const size_t m = lengths.size();
  std::vector<int> alloc(m);
  std::vector<std::pair<double, size_t>> rema;
  int used = 0;
  for (size_t e = 0; e < m; ++e) {
    const double exact = n * lengths[e] / perimeter;
    alloc[e] = std::max(1, static_cast<int>(std::floor(exact)));
    used += alloc[e];
    rema.push_back({exact - std::floor(exact), e});
  }
  // Ties resolve by edge index for determinism.
  std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t i = 0; used < n; i = (i + 1) % m, ++used) ++alloc[rema[i].second];
  while (used > n) {
    const auto it = std::max_element(alloc.begin(), alloc.end());
    --*it;
    --used;
  }
  return alloc;
}

}  // namespace

Mesh build_ogrid(const Shape& outer, const Shape& hole, int n_r, int n_t) {
  const auto* poly = std::get_if<ConvexPolygon>(&outer.kind());
  const auto* disk = std::get_if<Disk>(&hole.kind());
  if (poly == nullptr) throw InvalidArgument("O-grid outer boundary must be a convex polygon");
  if (disk == nullptr) throw InvalidArgument("O-grid hole must be a disk");
  if (n_r < 4 || n_t < 16 || n_t % 4 != 0) throw InvalidArgument("O-grid needs n_r >= 4 and n_t >= 16 divisible by 4");
  const auto& vs = poly->vertices;
  if (static_cast<int>(vs.size()) > n_t) throw InvalidArgument("outer polygon has more vertices than n_t");

  const Vec2 c = disk->center;
  const double r = disk->radius;
  if (!outer.contains(c)) throw GeometryClash("hole center lies outside the outer boundary");
  for (size_t e = 0; e < vs.size(); ++e) {
    const Vec2 a = vs[e], b = vs[(e + 1) % vs.size()];
    const double dist = cross(b - a, c - a) / norm(b - a);
    if (dist - r < 0.5 * r) {
      throw GeometryClash("hole clearance " + std::to_string(dist - r) + " to the outer boundary is below radius/2");
    }
  }

  std::vector<double> lengths;
  for (size_t e = 0; e < vs.size(); ++e) lengths.push_back(norm(vs[(e + 1) % vs.size()] - vs[e]));
  const std::vector<int> alloc = allocate_segments(lengths, n_t);
  std::vector<Vec2> outer_pts;
  for (size_t e = 0; e < vs.size(); ++e) {
    const Vec2 a = vs[e], b = vs[(e + 1) % vs.size()];
    for (int j = 0; j < alloc[e]; ++j) outer_pts.push_back(a + (b - a) * (static_cast<double>(j) / alloc[e]));
  }
  const double theta0 = std::atan2(vs[0].y - c.y, vs[0].x - c.x);

  Mesh m;
  m.nodes.reserve(static_cast<size_t>(n_t * (n_r + 1)));
  for (int i = 0; i <= n_r; ++i) {
    const double s = static_cast<double>(i) / n_r;
    for (int k = 0; k < n_t; ++k) {
      const double th = theta0 + 2.0 * kPi * k / n_t;
      const Vec2 inner = c + Vec2{std::cos(th), std::sin(th)} * r;
      m.nodes.push_back(inner * (1.0 - s) + outer_pts[static_cast<size_t>(k)] * s);
    }
  }
  auto id = [n_t](int i, int k) { return i * n_t + ((k % n_t) + n_t) % n_t; };
  for (int i = 0; i < n_r; ++i) {
    for (int k = 0; k < n_t; ++k) {
      // Ring index grows outward and k runs counterclockwise, so these are positively oriented.
      m.triangles.push_back({id(i, k), id(i + 1, k), id(i + 1, k + 1)});
      m.triangles.push_back({id(i, k), id(i + 1, k + 1), id(i, k + 1)});
    }
  }
  for (int k = 0; k < n_t; ++k) m.boundary_edges.push_back({id(0, k + 1), id(0, k), Marker::kObstacle});
  for (int k = 0; k < n_t; ++k) m.boundary_edges.push_back({id(n_r, k), id(n_r, k + 1), Marker::kOuter});
  for (size_t t = 0; t < m.triangles.size(); ++t) {
    if (!(m.triangle_area(static_cast<int>(t)) > 0.0)) {
      throw GeometryClash("O-grid folds over; the hole is too far off-center for this outer boundary");
    }
  }
  return m;
}

// ---------------------------------------------------------------- I/O

namespace {

void put_double(std::ostream& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty line with comments removed, split into tokens. Throws at EOF.
  std::vector<std::string_view> next(const char* expecting) {
    while (std::getline(in_, line_)) {
      ++lineno_;
      if (const auto pos = line_.find('#'); pos != std::string::npos) line_.resize(pos);
      auto toks = split(line_);
      if (!toks.empty()) return toks;
    }
    throw ParseError(lineno_ + 1, std::string("unexpected end of file, expecting ") + expecting);
  }

  bool at_end() {
    while (std::getline(in_, line_)) {
      ++lineno_;
      if (const auto pos = line_.find('#'); pos != std::string::npos) line_.resize(pos);
      if (!split(line_).empty()) return false;
    }
    return true;
  }

  int line() const { return lineno_; }

 private:
  static std::vector<std::string_view> split(std::string_view s) {
    std::vector<std::string_view> out;
    size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      size_t j = i;
      while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      if (j > i) out.push_back(s.substr(i, j - i));
      i = j;
    }
    return out;
  }

  std::istream& in_;
  std::string line_;
  int lineno_ = 0;
};

template <class T>
T parse_number(std::string_view tok, int line) {
  T v{};
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError(line, "bad number '" + std::string(tok) + "'");
  }
  return v;
}

size_t parse_section(LineReader& rd, std::string_view keyword) {
  const auto toks = rd.next(std::string(keyword).c_str());
  if (toks.size() != 2 || toks[0] != keyword) {
    throw ParseError(rd.line(), "expected '" + std::string(keyword) + " COUNT'");
  }
  const long n = parse_number<long>(toks[1], rd.line());
  if (n < 0) throw ParseError(rd.line(), "negative count");
  return static_cast<size_t>(n);
}

}  // namespace

void write_mesh(const Mesh& mesh, std::ostream& out) {
  out << "emesh 1\n";
  out << "nodes " << mesh.nodes.size() << '\n';
  for (const Vec2& p : mesh.nodes) {
    put_double(out, p.x);
    out << ' ';
    put_double(out, p.y);
    out << '\n';
  }
  out << "tris " << mesh.triangles.size() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "bedges " << mesh.boundary_edges.size() << '\n';
  for (const auto& e : mesh.boundary_edges) out << e.a << ' ' << e.b << ' ' << static_cast<int>(e.marker) << '\n';
}

void write_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
  write_mesh(mesh, out);
  if (!out) throw InvalidArgument("write to '" + path.string() + "' failed");
}

Mesh read_mesh(std::istream& in) {
  LineReader rd(in);
  {
    const auto toks = rd.next("header");
    if (toks.size() != 2 || toks[0] != "emesh" || toks[1] != "1") {
      throw ParseError(rd.line(), "expected header 'emesh 1'");
    }
  }
  Mesh m;
  const size_t n_nodes = parse_section(rd, "nodes");
  m.nodes.reserve(n_nodes);
  for (size_t i = 0; i < n_nodes; ++i) {
    const auto toks = rd.next("node coordinates");
    if (toks.size() != 2) throw ParseError(rd.line(), "node line needs 2 values");
    m.nodes.push_back({parse_number<double>(toks[0], rd.line()), parse_number<double>(toks[1], rd.line())});
  }
  const size_t n_tris = parse_section(rd, "tris");
  m.triangles.reserve(n_tris);
  for (size_t i = 0; i < n_tris; ++i) {
    const auto toks = rd.next("triangle");
    if (toks.size() != 3) throw ParseError(rd.line(), "triangle line needs 3 indices");
    m.triangles.push_back({parse_number<int>(toks[0], rd.line()), parse_number<int>(toks[1], rd.line()),
                           parse_number<int>(toks[2], rd.line())});
  }
  const size_t n_edges = parse_section(rd, "bedges");
  for (size_t i = 0; i < n_edges; ++i) {
    const auto toks = rd.next("boundary edge");
    if (toks.size() != 3) throw ParseError(rd.line(), "boundary edge line needs 3 values");
    const int marker = parse_number<int>(toks[2], rd.line());
    if (marker != 0 && marker != 1) throw ParseError(rd.line(), "marker must be 0 or 1");
    m.boundary_edges.push_back({parse_number<int>(toks[0], rd.line()), parse_number<int>(toks[1], rd.line()),
                                static_cast<Marker>(marker)});
  }
  if (!rd.at_end()) throw ParseError(rd.line(), "trailing content after boundary edges");
  validate(m);
  return m;
}

Mesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  return read_mesh(in);
}

}  // namespace enclab
