// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference kernels against their OpenMP counterparts, at the shapes
// the coupling conditioners use (batch 64, QM9-lite widths).

#include <benchmark/benchmark.h>

#include <vector>

#include "gnvp/kernels.hpp"
#include "gnvp/rng.hpp"

namespace {

using gnvp::Real;
namespace k = gnvp::kernels;

struct Operands {
  std::vector<Real> a, b, c;
  k::GemmArgs args;

  Operands(std::size_t m, std::size_t kk, std::size_t n, std::size_t batch = 1)
      : a(batch * m * kk), b(batch * kk * n), c(batch * m * n) {
    gnvp::Rng rng(7);
    for (Real& v : a) v = rng.normal();
    for (Real& v : b) v = rng.normal();
    args = k::GemmArgs{a.data(), b.data(), c.data(), m, kk, n};
  }
};

template <void (*Gemm)(const k::GemmArgs&)>
void BM_Gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto kk = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  Operands op(m, kk, n);
  for (auto _ : state) {
    Gemm(op.args);
    benchmark::DoNotOptimize(op.c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * kk * n));
}

template <void (*Batched)(const k::GemmArgs&, std::size_t)>
void BM_BatchedGemm(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  // Message passing: per-graph [N, N] x [N, hidden].
  Operands op(n, n, 64, batch);
  for (auto _ : state) {
    Batched(op.args, batch);
    benchmark::DoNotOptimize(op.c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch * n * n * 64));
}

// Adjacency MLP input layer, hidden layer, and node GCN projection.
void gemm_shapes(benchmark::internal::Benchmark* b) {
  b->Args({64, 288, 128})->Args({64, 128, 128})->Args({576, 20, 64});
}

BENCHMARK(BM_Gemm<k::serial::gemm>)->Apply(gemm_shapes);
BENCHMARK(BM_Gemm<k::parallel::gemm>)->Apply(gemm_shapes)->UseRealTime();
BENCHMARK(BM_BatchedGemm<k::serial::batched_gemm>)->Args({64, 9})->Args({64, 38});
BENCHMARK(BM_BatchedGemm<k::parallel::batched_gemm>)->Args({64, 9})->Args({64, 38})->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
