// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include "gnvp/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "gnvp/error.hpp"
#include "gnvp/kernels.hpp"

namespace gnvp::ad {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite input");
  nodes_.push_back(Node{std::move(value), {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(std::string_view name, const Tensor& value) {
  std::string key(name);
  if (const auto it = param_index_.find(key); it != param_index_.end()) return Var(this, it->second);
  nodes_.push_back(Node{Tensor(), {}, recording_, &value});
  params_.emplace_back(key, nodes_.size() - 1);
  param_index_.emplace(std::move(key), nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op) + ": produced a non-finite value (output shape " +
                       shape_string(value.shape()) + ")");
  }
  bool needs = false;
  if (recording_) {
    for (const Var& v : inputs) {
      if (&v.tape() != this) throw Error(std::string(op) + ": operand belongs to a different tape");
      needs = needs || nodes_[v.id()].requires_grad;
    }
  }
  nodes_.push_back(Node{std::move(value), needs ? std::move(backward) : BackwardFn{}, needs});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(std::size_t id) {
  Tensor& g = grads_[id];
  const Tensor& v = value(id);
  if (g.size() != v.size() || g.shape() != v.shape()) g = Tensor(v.shape());
  return g;
}

Gradients Tape::backward(Var loss) {
  if (&loss.tape() != this) throw Error("backward: loss belongs to a different tape");
  const Tensor& lv = value(loss.id());
  if (lv.rank() != 0) throw ShapeError("backward: loss must be a scalar, got shape " + shape_string(lv.shape()));
  if (!recording_) throw Error("backward: tape was created without gradient recording");

  grads_.assign(nodes_.size(), Tensor());
  grad(loss.id())[0] = Real(1);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.backward || grads_[id].size() == 0) continue;
    const Tensor g = std::move(grads_[id]);
    node.backward(g, value(id), *this);
  }

  Gradients out;
  for (const auto& [name, id] : params_) {
    Tensor g = grads_[id];
    const Tensor& v = value(id);
    if (g.shape() != v.shape() || g.size() != v.size()) g = Tensor(v.shape());
    out.emplace(name, std::move(g));
  }
  grads_.clear();
  return out;
}

namespace {

[[noreturn]] void shape_mismatch(std::string_view op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

enum class Broadcast { kNone, kLeading };

Broadcast check_binary(std::string_view op, const Shape& a, const Shape& b) {
  if (a == b) return Broadcast::kNone;
  if (!a.empty() && Shape(a.begin() + 1, a.end()) == b) return Broadcast::kLeading;
  shape_mismatch(op, a, b);
}

// Sum of `g` over its leading axis when the operand was broadcast.
void accumulate_reduced(Tensor& dst, const Tensor& g, Broadcast mode) {
  if (mode == Broadcast::kNone) {
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    return;
  }
  const std::size_t inner = dst.size();
  const std::size_t outer = inner == 0 ? 0 : g.size() / inner;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) dst[i] += g[o * inner + i];
  }
}

struct SplitIndex {
  std::size_t outer, extent, inner;
};

SplitIndex split_at(std::string_view op, const Shape& shape, Axis axis) {
  if (axis.index >= shape.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis.index) + " out of range for shape " +
                     shape_string(shape));
  }
  SplitIndex s{1, shape[axis.index], 1};
  for (std::size_t i = 0; i < axis.index; ++i) s.outer *= shape[i];
  for (std::size_t i = axis.index + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

template <typename F, typename DF>
Var unary(std::string_view op, Var a, F f, DF df) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  const std::size_t ia = a.id();
  return a.tape().record(op, std::move(out), {a}, [ia, df](const Tensor& g, const Tensor& y, Tape& t) {
    const Tensor& x = t.value(ia);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) shape_mismatch("matmul", av.shape(), bv.shape());
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out(Shape{m, n});
  kernels::gemm({av.ptr(), bv.ptr(), out.ptr(), m, k, n});
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("matmul", std::move(out), {a, b}, [ia, ib, m, k, n](const Tensor& g, const Tensor&, Tape& t) {
    using kernels::Transpose;
    if (t.requires_grad(ia)) {
      kernels::gemm({g.ptr(), t.value(ib).ptr(), t.grad(ia).ptr(), m, n, k, Transpose::kNo, Transpose::kYes, true});
    }
    if (t.requires_grad(ib)) {
      kernels::gemm({t.value(ia).ptr(), g.ptr(), t.grad(ib).ptr(), k, m, n, Transpose::kYes, Transpose::kNo, true});
    }
  });
}

Var bmm(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 3 || bv.rank() != 3 || av.dim(0) != bv.dim(0) || av.dim(2) != bv.dim(1)) {
    shape_mismatch("bmm", av.shape(), bv.shape());
  }
  const std::size_t batch = av.dim(0), m = av.dim(1), k = av.dim(2), n = bv.dim(2);
  Tensor out(Shape{batch, m, n});
  kernels::batched_gemm({av.ptr(), bv.ptr(), out.ptr(), m, k, n}, batch);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("bmm", std::move(out), {a, b},
                         [ia, ib, batch, m, k, n](const Tensor& g, const Tensor&, Tape& t) {
                           using kernels::Transpose;
                           if (t.requires_grad(ia)) {
                             kernels::batched_gemm({g.ptr(), t.value(ib).ptr(), t.grad(ia).ptr(), m, n, k,
                                                    Transpose::kNo, Transpose::kYes, true},
                                                   batch);
                           }
                           if (t.requires_grad(ib)) {
                             kernels::batched_gemm({t.value(ia).ptr(), g.ptr(), t.grad(ib).ptr(), k, m, n,
                                                    Transpose::kYes, Transpose::kNo, true},
                                                   batch);
                           }
                         });
}

Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast mode = check_binary("add", av.shape(), bv.shape());
  Tensor out(av.shape());
  const std::size_t inner = bv.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[mode == Broadcast::kNone ? i : i % inner];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("add", std::move(out), {a, b}, [ia, ib, mode](const Tensor& g, const Tensor&, Tape& t) {
    if (t.requires_grad(ia)) accumulate_reduced(t.grad(ia), g, Broadcast::kNone);
    if (t.requires_grad(ib)) accumulate_reduced(t.grad(ib), g, mode);
  });
}

Var sub(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast mode = check_binary("sub", av.shape(), bv.shape());
  Tensor out(av.shape());
  const std::size_t inner = bv.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[mode == Broadcast::kNone ? i : i % inner];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("sub", std::move(out), {a, b}, [ia, ib, mode](const Tensor& g, const Tensor&, Tape& t) {
    if (t.requires_grad(ia)) accumulate_reduced(t.grad(ia), g, Broadcast::kNone);
    if (t.requires_grad(ib)) {
      Tensor neg(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) neg[i] = -g[i];
      accumulate_reduced(t.grad(ib), neg, mode);
    }
  });
}

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Broadcast mode = check_binary("mul", av.shape(), bv.shape());
  Tensor out(av.shape());
  const std::size_t inner = bv.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[mode == Broadcast::kNone ? i : i % inner];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("mul", std::move(out), {a, b}, [ia, ib, mode](const Tensor& g, const Tensor&, Tape& t) {
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(ib);
    const std::size_t inner = y.size();
    const auto bi = [&](std::size_t i) { return mode == Broadcast::kNone ? i : i % inner; };
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[bi(i)];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[bi(i)] += g[i] * x[i];
    }
  });
}

Var scale(Var a, Real factor) {
  return unary(
      "scale", a, [factor](Real x) { return x * factor; }, [factor](Real, Real) { return factor; });
}

Var add_scalar(Var a, Real offset) {
  return unary(
      "add_scalar", a, [offset](Real x) { return x + offset; }, [](Real, Real) { return Real(1); });
}

Var exp(Var a) {
  return unary(
      "exp", a, [](Real x) { return std::exp(x); }, [](Real, Real y) { return y; });
}

Var log(Var a) {
  return unary(
      "log", a, [](Real x) { return std::log(x); }, [](Real x, Real) { return Real(1) / x; });
}

Var tanh(Var a) {
  return unary(
      "tanh", a, [](Real x) { return std::tanh(x); }, [](Real, Real y) { return Real(1) - y * y; });
}

Var relu(Var a) {
  return unary(
      "relu", a, [](Real x) { return x > Real(0) ? x : Real(0); },
      [](Real x, Real) { return x > Real(0) ? Real(1) : Real(0); });
}

Var square(Var a) {
  return unary(
      "square", a, [](Real x) { return x * x; }, [](Real x, Real) { return Real(2) * x; });
}

Var pow(Var a, Real exponent) {
  return unary(
      "pow", a, [exponent](Real x) { return std::pow(x, exponent); },
      [exponent](Real x, Real) { return exponent * std::pow(x, exponent - Real(1)); });
}

Var sum(Var a, Axis axis) {
  const Tensor& av = a.value();
  const SplitIndex s = split_at("sum", av.shape(), axis);
  Shape out_shape = av.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis.index));
  Tensor out(out_shape);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t e = 0; e < s.extent; ++e) {
      const Real* src = av.ptr() + (o * s.extent + e) * s.inner;
      Real* dst = out.ptr() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
    }
  }
  const std::size_t ia = a.id();
  return a.tape().record("sum", std::move(out), {a}, [ia, s](const Tensor& g, const Tensor&, Tape& t) {
    Tensor& ga = t.grad(ia);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t e = 0; e < s.extent; ++e) {
        Real* dst = ga.ptr() + (o * s.extent + e) * s.inner;
        const Real* src = g.ptr() + o * s.inner;
        for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
      }
    }
  });
}

Var mean(Var a, Axis axis) {
  const std::size_t extent = split_at("mean", a.shape(), axis).extent;
  if (extent == 0) throw ShapeError("mean: empty axis in shape " + shape_string(a.shape()));
  return scale(sum(a, axis), Real(1) / static_cast<Real>(extent));
}

Var sum_all(Var a) { return sum(reshape(a, Shape{a.value().size()}), Axis{0}); }

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  const std::size_t ia = a.id();
  return a.tape().record("reshape", std::move(out), {a}, [ia](const Tensor& g, const Tensor&, Tape& t) {
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var concat(std::span<const Var> parts, Axis axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  const Shape& first = parts[0].shape();
  const SplitIndex s0 = split_at("concat", first, axis);
  std::vector<std::size_t> extents;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Shape& sh = p.shape();
    if (sh.size() != first.size()) shape_mismatch("concat", first, sh);
    for (std::size_t d = 0; d < sh.size(); ++d) {
      if (d != axis.index && sh[d] != first[d]) shape_mismatch("concat", first, sh);
    }
    extents.push_back(sh[axis.index]);
    total += sh[axis.index];
  }
  Shape out_shape = first;
  out_shape[axis.index] = total;
  Tensor out(out_shape);
  const std::size_t inner = s0.inner;
  const std::size_t outer = s0.outer;
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& pv = parts[p].value();
    const std::size_t chunk = extents[p] * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(pv.ptr() + o * chunk, chunk, out.ptr() + (o * total + offset) * inner);
    }
    offset += extents[p];
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return parts[0].tape().record(
      "concat", std::move(out), parts, [ids, extents, total, inner, outer](const Tensor& g, const Tensor&, Tape& t) {
        std::size_t offset = 0;
        for (std::size_t p = 0; p < ids.size(); ++p) {
          const std::size_t chunk = extents[p] * inner;
          if (t.requires_grad(ids[p])) {
            Tensor& gp = t.grad(ids[p]);
            for (std::size_t o = 0; o < outer; ++o) {
              const Real* src = g.ptr() + (o * total + offset) * inner;
              Real* dst = gp.ptr() + o * chunk;
              for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
            }
          }
          offset += extents[p];
        }
      });
}

Var index_select(Var a, Axis axis, std::span<const std::size_t> indices) {
  const Tensor& av = a.value();
  const SplitIndex s = split_at("index_select", av.shape(), axis);
  for (std::size_t idx : indices) {
    if (idx >= s.extent) {
      throw ShapeError("index_select: index " + std::to_string(idx) + " out of range for shape " +
                       shape_string(av.shape()));
    }
  }
  Shape out_shape = av.shape();
  out_shape[axis.index] = indices.size();
  Tensor out(out_shape);
  const std::size_t k = indices.size();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t e = 0; e < k; ++e) {
      std::copy_n(av.ptr() + (o * s.extent + indices[e]) * s.inner, s.inner, out.ptr() + (o * k + e) * s.inner);
    }
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  const std::size_t ia = a.id();
  return a.tape().record("index_select", std::move(out), {a}, [ia, idx, s](const Tensor& g, const Tensor&, Tape& t) {
    Tensor& ga = t.grad(ia);
    const std::size_t k = idx.size();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t e = 0; e < k; ++e) {
        const Real* src = g.ptr() + (o * k + e) * s.inner;
        Real* dst = ga.ptr() + (o * s.extent + idx[e]) * s.inner;
        for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
      }
    }
  });
}

Var masked_assign(Var a, Axis axis, std::size_t index, Var value) {
  const Tensor& av = a.value();
  const Tensor& vv = value.value();
  const SplitIndex s = split_at("masked_assign", av.shape(), axis);
  Shape expected = av.shape();
  expected[axis.index] = 1;
  if (vv.shape() != expected) shape_mismatch("masked_assign", av.shape(), vv.shape());
  if (index >= s.extent) {
    throw ShapeError("masked_assign: index " + std::to_string(index) + " out of range for shape " +
                     shape_string(av.shape()));
  }
  Tensor out = av;
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(vv.ptr() + o * s.inner, s.inner, out.ptr() + (o * s.extent + index) * s.inner);
  }
  const std::size_t ia = a.id(), iv = value.id();
  return a.tape().record("masked_assign", std::move(out), {a, value},
                         [ia, iv, s, index](const Tensor& g, const Tensor&, Tape& t) {
                           if (t.requires_grad(ia)) {
                             Tensor& ga = t.grad(ia);
                             for (std::size_t o = 0; o < s.outer; ++o) {
                               for (std::size_t e = 0; e < s.extent; ++e) {
                                 if (e == index) continue;
                                 const std::size_t base = (o * s.extent + e) * s.inner;
                                 for (std::size_t i = 0; i < s.inner; ++i) ga[base + i] += g[base + i];
                               }
                             }
                           }
                           if (t.requires_grad(iv)) {
                             Tensor& gv = t.grad(iv);
                             for (std::size_t o = 0; o < s.outer; ++o) {
                               const std::size_t base = (o * s.extent + index) * s.inner;
                               for (std::size_t i = 0; i < s.inner; ++i) gv[o * s.inner + i] += g[base + i];
                             }
                           }
                         });
}

}  // namespace gnvp::ad
