#pragma once

#include <cmath>
#include <complex>
#include <numbers>

namespace enclab {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
/// +90 degree rotation.
constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

/// Complex 2-vector, used for the CGO frequency z and for field gradients.
struct CVec2 {
  cplx x;
  cplx y;
};

inline cplx dot(const CVec2& a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline cplx dot(const CVec2& a, const CVec2& b) { return a.x * b.x + a.y * b.y; }

/// Signed area of the triangle (a, b, c); positive when counterclockwise.
constexpr double signed_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * cross(b - a, c - a); }

}  // namespace enclab
