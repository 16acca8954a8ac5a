// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace gnvp {

#ifdef GNVP_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor of Real scalars. A rank-0 tensor holds one scalar.
class Tensor {
 public:
  Tensor() : shape_{0} {}
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> data);
  Tensor(Shape shape, std::initializer_list<Real> data);

  static Tensor scalar(Real value) { return Tensor(Shape{}, {value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const Real> data() const noexcept { return data_; }
  std::span<Real> data() noexcept { return data_; }
  const Real* ptr() const noexcept { return data_.data(); }
  Real* ptr() noexcept { return data_.data(); }

  Real operator[](std::size_t i) const { return data_[i]; }
  Real& operator[](std::size_t i) { return data_[i]; }

  /// Multi-index access; index count must equal rank.
  Real at(std::initializer_list<std::size_t> index) const;
  Real& at(std::initializer_list<std::size_t> index);

  /// Value of a tensor with exactly one element.
  Real item() const;

  Tensor reshaped(Shape shape) const;

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<Real> data_;
};

/// Largest absolute elementwise difference; shapes must match.
Real max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace gnvp
