// Serial reference kernels against their OpenMP versions. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <complex>
#include <vector>

#include "enclab/geometry.hpp"
#include "enclab/kernels.hpp"
#include "enclab/mesh.hpp"

using namespace enclab;

namespace {

const Mesh& mesh_of(int n) {
  static std::vector<std::pair<int, Mesh>> cache;
  for (const auto& [k, m] : cache) {
    if (k == n) return m;
  }
  cache.emplace_back(n, build_uniform({{-1.0, -1.0}, {1.0, 1.0}}, n, n));
  return cache.back().second;
}

std::vector<cplx> field(size_t n) {
  std::vector<cplx> v(n);
  for (size_t i = 0; i < n; ++i) v[i] = {std::sin(0.01 * i), std::cos(0.013 * i)};
  return v;
}

template <bool Serial>
void element_matrices(benchmark::State& state) {
  const Mesh& m = mesh_of(static_cast<int>(state.range(0)));
  const auto c = field(m.nodes.size());
  for (auto _ : state) {
    auto out = Serial ? kernels::serial::element_matrices(m, c) : kernels::element_matrices(m, c);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(m.triangles.size()));
}

template <bool Serial>
void born_source(benchmark::State& state) {
  const auto n = static_cast<size_t>(state.range(0)) * static_cast<size_t>(state.range(0));
  const auto v0 = field(n), psi = field(n);
  std::vector<cplx> out(n);
  for (auto _ : state) {
    if (Serial) {
      kernels::serial::born_source(v0, psi, out);
    } else {
      kernels::born_source(v0, psi, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}

template <bool Serial>
void apply_symbol(benchmark::State& state) {
  const auto n = static_cast<size_t>(state.range(0)) * static_cast<size_t>(state.range(0));
  const auto symbol = field(n);
  auto data = field(n);
  for (auto _ : state) {
    if (Serial) {
      kernels::serial::apply_symbol(data, symbol);
    } else {
      kernels::apply_symbol(data, symbol);
    }
    benchmark::DoNotOptimize(data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}

template <bool Serial>
void exponential_moments(benchmark::State& state) {
  const Shape d = Shape::cone_fixture();
  const Direction dir = Direction::from_angle(-1.2);
  std::vector<double> rates;
  for (int i = 0; i < state.range(0); ++i) rates.push_back(2.0 + 4.0 * i);
  for (auto _ : state) {
    auto out = Serial ? kernels::serial::exponential_moments(d, dir, rates) : kernels::exponential_moments(d, dir, rates);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(element_matrices<true>)->Name("element_matrices/serial")->Arg(128)->Arg(512);
BENCHMARK(element_matrices<false>)->Name("element_matrices/parallel")->Arg(128)->Arg(512);
BENCHMARK(born_source<true>)->Name("born_source/serial")->Arg(512)->Arg(1024);
BENCHMARK(born_source<false>)->Name("born_source/parallel")->Arg(512)->Arg(1024);
BENCHMARK(apply_symbol<true>)->Name("apply_symbol/serial")->Arg(512)->Arg(1024);
BENCHMARK(apply_symbol<false>)->Name("apply_symbol/parallel")->Arg(512)->Arg(1024);
BENCHMARK(exponential_moments<true>)->Name("exponential_moments/serial")->Arg(16)->Arg(64);
BENCHMARK(exponential_moments<false>)->Name("exponential_moments/parallel")->Arg(16)->Arg(64);

BENCHMARK_MAIN();
