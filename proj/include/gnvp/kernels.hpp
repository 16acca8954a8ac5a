// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dense inner-loop kernels. Every kernel has a serial reference and an
// OpenMP version that partitions the output rows across threads; both run the
// same per-element accumulation order, so their results are bit-identical.

#include <cstddef>

#include "gnvp/tensor.hpp"

namespace gnvp::kernels {

enum class Transpose { kNo, kYes };

/// C[m,n] (+)= op(A)[m,k] * op(B)[k,n]. A is stored as [m,k] (or [k,m] when
/// transposed), B as [k,n] (or [n,k]).
struct GemmArgs {
  const Real* a;
  const Real* b;
  Real* c;
  std::size_t m, k, n;
  Transpose trans_a = Transpose::kNo;
  Transpose trans_b = Transpose::kNo;
  bool accumulate = false;
};

namespace serial {
void gemm(const GemmArgs& args);
/// Batched gemm: `batch` independent products with contiguous operands.
void batched_gemm(const GemmArgs& args, std::size_t batch);
}  // namespace serial

namespace parallel {
void gemm(const GemmArgs& args);
void batched_gemm(const GemmArgs& args, std::size_t batch);
}  // namespace parallel

/// Dispatches to the OpenMP kernel when more than one thread is available and
/// the product is large enough to amortize the fork.
void gemm(const GemmArgs& args);
void batched_gemm(const GemmArgs& args, std::size_t batch);

/// Worker threads used by the parallel kernels.
int max_threads();
void set_max_threads(int threads);

}  // namespace gnvp::kernels
