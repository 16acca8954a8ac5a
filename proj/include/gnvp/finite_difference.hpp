// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "gnvp/tensor.hpp"

namespace gnvp {

/// Central-difference gradient of a scalar function:
/// (f(p + step*e_i) - f(p - step*e_i)) / (2*step) for every coordinate i.
/// Throws InvalidArgument for step <= 0 and NumericError when f is not finite.
Tensor finite_difference_gradient(const std::function<Real(const Tensor&)>& f, const Tensor& p, Real step);

/// ||a - b||_inf / max(||b||_inf, floor). Used to compare gradients.
Real relative_error(const Tensor& a, const Tensor& b, Real floor = Real(1e-8));

}  // namespace gnvp
