#include "enclab/kernels.hpp"

#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "enclab/errors.hpp"
#include "enclab/geometry.hpp"

namespace enclab::kernels {

namespace {

LocalMatrix local_matrix(const Mesh& mesh, std::span<const cplx> c, size_t t) {
  const auto& tri = mesh.triangles[t];
  const Vec2 p[3] = {mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]};
  const double area = signed_area(p[0], p[1], p[2]);
  // grad phi_i = perp(p_k - p_j) / (2 area) for cyclic (i, j, k)
  Vec2 g[3];
  for (int i = 0; i < 3; ++i) {
    const Vec2 e = p[(i + 2) % 3] - p[(i + 1) % 3];
    g[i] = Vec2{-e.y, e.x} / (2.0 * area);
  }
  const cplx cn[3] = {c[tri[0]], c[tri[1]], c[tri[2]]};
  const cplx csum = cn[0] + cn[1] + cn[2];
  LocalMatrix m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      // int phi_i phi_j phi_l: A/10 (i=j=l), A/30 (two equal), A/60 (distinct)
      cplx mass;
      if (i == j) {
        mass = area * (cn[i] / 10.0 + (csum - cn[i]) / 30.0);
      } else {
        const cplx cl = csum - cn[i] - cn[j];
        mass = area * ((cn[i] + cn[j]) / 30.0 + cl / 60.0);
      }
      m[3 * i + j] = area * dot(g[i], g[j]) - mass;
    }
  }
  return m;
}

void check_sizes(size_t a, size_t b) {
  if (a != b) throw InvalidArgument("kernel operand sizes differ");
}

}  // namespace

std::vector<LocalMatrix> element_matrices(const Mesh& mesh, std::span<const cplx> c) {
  check_sizes(c.size(), mesh.nodes.size());
  std::vector<LocalMatrix> out(mesh.triangles.size());
  const long n = static_cast<long>(out.size());
#pragma omp parallel for schedule(static)
  for (long t = 0; t < n; ++t) out[static_cast<size_t>(t)] = local_matrix(mesh, c, static_cast<size_t>(t));
  return out;
}

void born_source(std::span<const cplx> v0, std::span<const cplx> psi, std::span<cplx> out) {
  check_sizes(v0.size(), psi.size());
  check_sizes(v0.size(), out.size());
  const long n = static_cast<long>(out.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) out[i] = v0[i] * (1.0 + psi[i]);
}

void apply_symbol(std::span<cplx> data, std::span<const cplx> symbol) {
  check_sizes(data.size(), symbol.size());
  const long n = static_cast<long>(data.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) data[i] *= symbol[i];
}

std::vector<double> exponential_moments(const Shape& shape, const Direction& dir, std::span<const double> rates) {
  std::vector<double> out(rates.size());
  const long n = static_cast<long>(rates.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<size_t>(i)] = exponential_moment(shape, dir, rates[i]);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

namespace serial {

std::vector<LocalMatrix> element_matrices(const Mesh& mesh, std::span<const cplx> c) {
  check_sizes(c.size(), mesh.nodes.size());
  std::vector<LocalMatrix> out;
  out.reserve(mesh.triangles.size());
  for (size_t t = 0; t < mesh.triangles.size(); ++t) out.push_back(local_matrix(mesh, c, t));
  return out;
}

void born_source(std::span<const cplx> v0, std::span<const cplx> psi, std::span<cplx> out) {
  check_sizes(v0.size(), psi.size());
  check_sizes(v0.size(), out.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = v0[i] * (1.0 + psi[i]);
}

void apply_symbol(std::span<cplx> data, std::span<const cplx> symbol) {
  check_sizes(data.size(), symbol.size());
  for (size_t i = 0; i < data.size(); ++i) data[i] *= symbol[i];
}

std::vector<double> exponential_moments(const Shape& shape, const Direction& dir, std::span<const double> rates) {
  std::vector<double> out;
  out.reserve(rates.size());
  for (double r : rates) out.push_back(exponential_moment(shape, dir, r));
  return out;
}

}  // namespace serial

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace enclab::kernels
