#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version and a serial reference
// in `kernels::serial` with identical results; tests compare the two and bench/ times them.

#include <array>
#include <span>
#include <vector>

#include "enclab/common.hpp"
#include "enclab/mesh.hpp"

namespace enclab::kernels {

using LocalMatrix = std::array<cplx, 9>;  // row-major 3x3

/// Per-triangle P1 matrices of K - M_c, c given per node.
std::vector<LocalMatrix> element_matrices(const Mesh& mesh, std::span<const cplx> c);

/// out[i] = v0[i] * (1 + psi[i])
void born_source(std::span<const cplx> v0, std::span<const cplx> psi, std::span<cplx> out);

/// data[i] *= symbol[i]
void apply_symbol(std::span<cplx> data, std::span<const cplx> symbol);

/// Slice-integral moments int_D exp(-rate (h - x.omega)) for a batch of rates.
std::vector<double> exponential_moments(const Shape& shape, const Direction& dir, std::span<const double> rates);

namespace serial {
std::vector<LocalMatrix> element_matrices(const Mesh& mesh, std::span<const cplx> c);
void born_source(std::span<const cplx> v0, std::span<const cplx> psi, std::span<cplx> out);
void apply_symbol(std::span<cplx> data, std::span<const cplx> symbol);
std::vector<double> exponential_moments(const Shape& shape, const Direction& dir, std::span<const double> rates);
}  // namespace serial

/// Threads used by the parallel kernels (omp_get_max_threads, or 1 without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace enclab::kernels
