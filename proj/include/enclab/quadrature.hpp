#pragma once

#include <array>

#include "enclab/common.hpp"

namespace enclab::quad {

/// Barycentric point and weight (weights sum to 1; multiply by the triangle area).
struct TriPoint {
  double l0, l1, l2, w;
};

/// Symmetric 6-point rule, exact for polynomials of degree 4.
inline constexpr std::array<TriPoint, 6> kTriangle6{{
    {0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.108103018168070, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.445948490915965, 0.108103018168070, 0.223381589678011},
    {0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.816847572980459, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.091576213509771, 0.816847572980459, 0.109951743655322},
}};

/// Gauss-Legendre point on [0, 1] (weights sum to 1).
struct LinePoint {
  double s, w;
};

inline constexpr std::array<LinePoint, 4> kLine4{{
    {0.5 - 0.5 * 0.8611363115940526, 0.5 * 0.3478548451374538},
    {0.5 - 0.5 * 0.3399810435848563, 0.5 * 0.6521451548625461},
    {0.5 + 0.5 * 0.3399810435848563, 0.5 * 0.6521451548625461},
    {0.5 + 0.5 * 0.8611363115940526, 0.5 * 0.3478548451374538},
}};

inline Vec2 tri_point(const TriPoint& q, Vec2 a, Vec2 b, Vec2 c) {
  return a * q.l0 + b * q.l1 + c * q.l2;
}

}  // namespace enclab::quad
