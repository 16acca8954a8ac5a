// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reverse-mode differentiation over dense tensors.
//
// A Tape records every op applied to its Vars. Parameters are named leaves;
// backward() replays the tape in reverse and returns one gradient per
// registered parameter. A tape is single-threaded; run one tape per worker.
//
// Elementwise binary ops accept either equal shapes or a right operand whose
// shape equals the left operand's shape without its leading (batch) axis.

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gnvp/tensor.hpp"

namespace gnvp::ad {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using Gradients = std::map<std::string, Tensor, std::less<>>;

class Tape {
 public:
  /// Receives the upstream gradient and the node's own value, and accumulates
  /// into the gradients of its inputs.
  using BackwardFn = std::function<void(const Tensor& grad_out, const Tensor& out, Tape& tape)>;

  /// With record_gradients = false the tape only evaluates (no closures kept).
  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Registers a named trainable leaf; binding the same name twice returns the
  /// same Var. The tape refers to `value` without copying it, so the tensor
  /// must outlive the tape and stay unchanged while the tape is in use.
  Var parameter(std::string_view name, const Tensor& value);
  Var parameter(std::string_view name, const Tensor&& value) = delete;

  /// d loss / d p for every registered parameter. Unused parameters get zeros.
  Gradients backward(Var loss);

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external != nullptr ? *n.external : n.value;
  }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Records a computed value. `inputs` decide whether the node needs a gradient.
  /// The op name is used for non-finite diagnostics.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward);

  /// Gradient buffer of node `id` during backward(), allocated as zeros on first use.
  Tensor& grad(std::size_t id);

 private:
  struct Node {
    Tensor value;
    BackwardFn backward;
    bool requires_grad = false;
    const Tensor* external = nullptr;
  };

  bool recording_;
  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, std::size_t>> params_;
  std::unordered_map<std::string, std::size_t> param_index_;
  std::vector<Tensor> grads_;
};

/// Which axis a reduction or slicing op acts on.
struct Axis {
  std::size_t index;
};

// Linear algebra.
Var matmul(Var a, Var b);  ///< [m,k] x [k,n]
Var bmm(Var a, Var b);     ///< [B,m,k] x [B,k,n]

// Elementwise (leading-axis broadcast on the right operand).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, Real factor);
Var add_scalar(Var a, Real offset);
Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var relu(Var a);
Var square(Var a);
Var pow(Var a, Real exponent);

// Reductions; the reduced axis is removed from the shape.
Var sum(Var a, Axis axis);
Var mean(Var a, Axis axis);
Var sum_all(Var a);  ///< rank-0 result

// Structure.
Var reshape(Var a, Shape shape);
Var concat(std::span<const Var> parts, Axis axis);
Var index_select(Var a, Axis axis, std::span<const std::size_t> indices);
/// Copy of `a` with slice `index` along `axis` replaced by `value`
/// (value has `a`'s shape with that axis of extent 1).
Var masked_assign(Var a, Axis axis, std::size_t index, Var value);

}  // namespace gnvp::ad
