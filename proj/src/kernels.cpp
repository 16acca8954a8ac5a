// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include "gnvp/kernels.hpp"

#include <omp.h>

#include <algorithm>

namespace gnvp::kernels {
namespace {

constexpr std::size_t kParallelFlopThreshold = 1 << 15;

// One output row. Shared by the serial and OpenMP paths so both use the same
// accumulation order.
inline void gemm_row(const GemmArgs& g, std::size_t i) {
  Real* __restrict crow = g.c + i * g.n;
  if (!g.accumulate) std::fill(crow, crow + g.n, Real(0));
  const bool ta = g.trans_a == Transpose::kYes;
  const bool tb = g.trans_b == Transpose::kYes;
  if (!tb) {
    for (std::size_t p = 0; p < g.k; ++p) {
      const Real aip = ta ? g.a[p * g.m + i] : g.a[i * g.k + p];
      if (aip == Real(0)) continue;
      const Real* __restrict brow = g.b + p * g.n;
      for (std::size_t j = 0; j < g.n; ++j) crow[j] += aip * brow[j];
    }
  } else {
    for (std::size_t j = 0; j < g.n; ++j) {
      const Real* __restrict brow = g.b + j * g.k;
      Real acc = 0;
      if (!ta) {
        const Real* __restrict arow = g.a + i * g.k;
        for (std::size_t p = 0; p < g.k; ++p) acc += arow[p] * brow[p];
      } else {
        for (std::size_t p = 0; p < g.k; ++p) acc += g.a[p * g.m + i] * brow[p];
      }
      crow[j] += acc;
    }
  }
}

inline GemmArgs batch_slice(const GemmArgs& g, std::size_t b) {
  GemmArgs s = g;
  s.a += b * g.m * g.k;
  s.b += b * g.k * g.n;
  s.c += b * g.m * g.n;
  return s;
}

}  // namespace

namespace serial {

void gemm(const GemmArgs& args) {
  for (std::size_t i = 0; i < args.m; ++i) gemm_row(args, i);
}

void batched_gemm(const GemmArgs& args, std::size_t batch) {
  for (std::size_t b = 0; b < batch; ++b) serial::gemm(batch_slice(args, b));
}

}  // namespace serial

namespace parallel {

void gemm(const GemmArgs& args) {
  const auto m = static_cast<std::ptrdiff_t>(args.m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i) gemm_row(args, static_cast<std::size_t>(i));
}

void batched_gemm(const GemmArgs& args, std::size_t batch) {
  const auto rows = static_cast<std::ptrdiff_t>(batch * args.m);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const auto b = static_cast<std::size_t>(r) / args.m;
    gemm_row(batch_slice(args, b), static_cast<std::size_t>(r) % args.m);
  }
}

}  // namespace parallel

int max_threads() { return omp_get_max_threads(); }

void set_max_threads(int threads) { omp_set_num_threads(std::max(1, threads)); }

void gemm(const GemmArgs& args) {
  if (omp_get_max_threads() > 1 && !omp_in_parallel() && args.m > 1 &&
      args.m * args.k * args.n >= kParallelFlopThreshold) {
    parallel::gemm(args);
  } else {
    serial::gemm(args);
  }
}

void batched_gemm(const GemmArgs& args, std::size_t batch) {
  if (omp_get_max_threads() > 1 && !omp_in_parallel() &&
      batch * args.m * args.k * args.n >= kParallelFlopThreshold) {
    parallel::batched_gemm(args, batch);
  } else {
    serial::batched_gemm(args, batch);
  }
}

}  // namespace gnvp::kernels
