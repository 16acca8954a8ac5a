// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include "gnvp/finite_difference.hpp"

#include <algorithm>
#include <cmath>

#include "gnvp/error.hpp"

namespace gnvp {

Tensor finite_difference_gradient(const std::function<Real(const Tensor&)>& f, const Tensor& p, Real step) {
  if (!(step > Real(0))) throw InvalidArgument("finite_difference_gradient: step must be positive");
  Tensor grad(p.shape());
  Tensor probe = p;
  for (std::size_t i = 0; i < p.size(); ++i) {
    probe[i] = p[i] + step;
    const Real up = f(probe);
    probe[i] = p[i] - step;
    const Real down = f(probe);
    probe[i] = p[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_difference_gradient: non-finite evaluation at coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (Real(2) * step);
  }
  return grad;
}

Real relative_error(const Tensor& a, const Tensor& b, Real floor) {
  Real scale = 0;
  for (Real v : b.data()) scale = std::max(scale, std::abs(v));
  return max_abs_diff(a, b) / std::max(scale, floor);
}

}  // namespace gnvp
