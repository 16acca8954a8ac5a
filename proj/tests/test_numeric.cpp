// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "gnvp/autodiff.hpp"
#include "gnvp/error.hpp"
#include "gnvp/finite_difference.hpp"
#include "gnvp/kernels.hpp"
#include "gnvp/rng.hpp"
#include "gnvp/tensor.hpp"

using namespace gnvp;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, Real lo = -1, Real hi = 1) {
  Tensor t(std::move(shape));
  for (Real& v : t.data()) v = lo + (hi - lo) * rng.uniform();
  return t;
}

// Checks d/dp sum(w * op(p)) from the tape against central differences.
void check_unary_gradient(const std::function<ad::Var(ad::Var)>& op, const Tensor& p, Real tol = Real(1e-6)) {
  Rng rng(99);
  ad::Tape probe(false);
  const Tensor w = random_tensor(op(probe.constant(p)).shape(), rng);
  auto value = [&](const Tensor& x) {
    ad::Tape tape(false);
    return ad::sum_all(ad::mul(op(tape.constant(x)), tape.constant(w))).value().item();
  };
  ad::Tape tape(true);
  const ad::Var loss = ad::sum_all(ad::mul(op(tape.parameter("p", p)), tape.constant(w)));
  const ad::Gradients g = tape.backward(loss);
  const Tensor fd = finite_difference_gradient(value, p, Real(1e-6));
  CHECK(relative_error(g.at("p"), fd) < tol);
}

}  // namespace

TEST_SUITE("numeric-core") {
  TEST_CASE("tensor construction and shape checks") {
    const Tensor t(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.rank() == 2);
    CHECK(t.at({1, 2}) == 6);
    CHECK(t.reshaped(Shape{3, 2}).at({2, 0}) == 5);
    CHECK_THROWS_AS(t.reshaped(Shape{4}), ShapeError);
    CHECK_THROWS_AS(Tensor(Shape{2}, {1, 2, 3}), ShapeError);
    CHECK(Tensor::scalar(2.5).item() == 2.5);
    CHECK_THROWS_AS(t.item(), ShapeError);
    CHECK(max_abs_diff(t, t) == 0);
  }

  TEST_CASE("exp of zeros is all ones") {
    ad::Tape tape(false);
    const Tensor out = ad::exp(tape.constant(Tensor(Shape{2, 3}))).value();
    CHECK(out.shape() == Shape{2, 3});
    for (Real v : out.data()) CHECK(v == 1);
  }

  TEST_CASE("matmul by identity") {
    ad::Tape tape(false);
    const Tensor a(Shape{2, 2}, {1, 2, 3, 4});
    const Tensor eye(Shape{2, 2}, {1, 0, 0, 1});
    const Tensor out = ad::matmul(tape.constant(a), tape.constant(eye)).value();
    CHECK(max_abs_diff(out, a) == 0);
  }

  TEST_CASE("sum over the last axis") {
    ad::Tape tape(false);
    const Tensor out = ad::sum(tape.constant(Tensor(Shape{2, 2}, {1, 2, 3, 4})), ad::Axis{1}).value();
    CHECK(out.shape() == Shape{2});
    CHECK(out[0] == 3);
    CHECK(out[1] == 7);
  }

  TEST_CASE("gradient of sum is ones") {
    ad::Tape tape(true);
    const Tensor value(Shape{3}, {4, -1, 2});
    const ad::Var p = tape.parameter("p", value);
    const ad::Gradients g = tape.backward(ad::sum_all(p));
    for (Real v : g.at("p").data()) CHECK(v == 1);
  }

  TEST_CASE("gradient of sum of squares is 2p") {
    ad::Tape tape(true);
    const Tensor value(Shape{3}, {1, 2, 3});
    const ad::Var p = tape.parameter("p", value);
    const ad::Gradients g = tape.backward(ad::sum_all(ad::mul(p, p)));
    CHECK(g.at("p")[0] == 2);
    CHECK(g.at("p")[1] == 4);
    CHECK(g.at("p")[2] == 6);
  }

  TEST_CASE("reused parameter accumulates gradient") {
    ad::Tape tape(true);
    const Tensor value(Shape{2}, {1.5, -2});
    const ad::Var a = tape.parameter("p", value);
    const ad::Var b = tape.parameter("p", value);
    const ad::Gradients g = tape.backward(ad::sum_all(ad::add(ad::scale(a, 3), b)));
    CHECK(g.at("p")[0] == 4);
    CHECK(g.at("p")[1] == 4);
  }

  TEST_CASE("non-recording tape refuses backward") {
    const Tensor value(Shape{1}, {1});
    ad::Tape tape(false);
    const ad::Var p = tape.parameter("p", value);
    CHECK_THROWS(tape.backward(ad::sum_all(p)));
  }

  TEST_CASE("backward needs a scalar loss") {
    const Tensor value(Shape{2}, {1, 2});
    ad::Tape tape(true);
    const ad::Var p = tape.parameter("p", value);
    CHECK_THROWS_AS(tape.backward(p), ShapeError);
  }

  TEST_CASE("op gradients match central differences") {
    Rng rng(5);
    const Tensor p = random_tensor(Shape{3, 4}, rng);
    const Tensor positive = random_tensor(Shape{3, 4}, rng, Real(0.5), Real(2));
    const Tensor other = random_tensor(Shape{3, 4}, rng);
    const Tensor row = random_tensor(Shape{4}, rng);
    const Tensor right = random_tensor(Shape{4, 5}, rng);

    SUBCASE("elementwise") {
      check_unary_gradient([](ad::Var x) { return ad::exp(x); }, p);
      check_unary_gradient([](ad::Var x) { return ad::log(x); }, positive);
      check_unary_gradient([](ad::Var x) { return ad::tanh(x); }, p);
      check_unary_gradient([](ad::Var x) { return ad::square(x); }, p);
      check_unary_gradient([](ad::Var x) { return ad::pow(x, Real(1.5)); }, positive);
      check_unary_gradient([](ad::Var x) { return ad::add_scalar(ad::scale(x, -2), 3); }, p);
    }
    SUBCASE("relu away from the kink") {
      Tensor q = p;
      for (Real& v : q.data()) v = v >= 0 ? v + Real(0.1) : v - Real(0.1);
      check_unary_gradient([](ad::Var x) { return ad::relu(x); }, q);
    }
    SUBCASE("binary with broadcast") {
      check_unary_gradient([&](ad::Var x) { return ad::mul(x, x.tape().constant(other)); }, p);
      check_unary_gradient([&](ad::Var x) { return ad::sub(x.tape().constant(other), x); }, p);
      // [3,4] op [4] broadcasts over the leading axis; differentiate the right side.
      check_unary_gradient([&](ad::Var x) { return ad::add(x.tape().constant(p), x); }, row);
      check_unary_gradient([&](ad::Var x) { return ad::mul(x.tape().constant(p), x); }, row);
    }
    SUBCASE("linear algebra") {
      check_unary_gradient([&](ad::Var x) { return ad::matmul(x, x.tape().constant(right)); }, p);
      check_unary_gradient([&](ad::Var x) { return ad::matmul(x.tape().constant(p), x); }, right);
      const Tensor batch_a = random_tensor(Shape{2, 3, 4}, rng);
      const Tensor batch_b = random_tensor(Shape{2, 4, 2}, rng);
      check_unary_gradient([&](ad::Var x) { return ad::bmm(x, x.tape().constant(batch_b)); }, batch_a);
      check_unary_gradient([&](ad::Var x) { return ad::bmm(x.tape().constant(batch_a), x); }, batch_b);
    }
    SUBCASE("reductions and structure") {
      check_unary_gradient([](ad::Var x) { return ad::sum(x, ad::Axis{0}); }, p);
      check_unary_gradient([](ad::Var x) { return ad::mean(x, ad::Axis{1}); }, p);
      check_unary_gradient([](ad::Var x) { return ad::reshape(x, Shape{2, 6}); }, p);
      const std::vector<std::size_t> idx{2, 0, 2};
      check_unary_gradient([&](ad::Var x) { return ad::index_select(x, ad::Axis{1}, idx); }, p);
      check_unary_gradient(
          [&](ad::Var x) {
            const std::vector<ad::Var> parts{x, ad::square(x)};
            return ad::concat(parts, ad::Axis{1});
          },
          p);
      check_unary_gradient(
          [&](ad::Var x) {
            const std::vector<std::size_t> src{2};
            return ad::masked_assign(x, ad::Axis{0}, 1, ad::scale(ad::index_select(x, ad::Axis{0}, src), 3));
          },
          p);
    }
  }

  TEST_CASE("masked_assign replaces exactly one slice") {
    ad::Tape tape(false);
    const Tensor a(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
    const Tensor v(Shape{2, 1}, {-1, -2});
    const Tensor out = ad::masked_assign(tape.constant(a), ad::Axis{1}, 1, tape.constant(v)).value();
    CHECK(out.at({0, 0}) == 1);
    CHECK(out.at({0, 1}) == -1);
    CHECK(out.at({1, 1}) == -2);
    CHECK(out.at({1, 2}) == 6);
  }

  TEST_CASE("shape mismatches are rejected") {
    ad::Tape tape(false);
    const ad::Var a = tape.constant(Tensor(Shape{2, 3}));
    const ad::Var b = tape.constant(Tensor(Shape{4, 2}));
    CHECK_THROWS_AS(ad::matmul(a, b), ShapeError);
    CHECK_THROWS_AS(ad::add(a, b), ShapeError);
    CHECK_THROWS_AS(ad::sum(a, ad::Axis{2}), ShapeError);
  }

  TEST_CASE("finite differences of a quadratic") {
    auto f = [](const Tensor& p) {
      Real s = 0;
      for (Real v : p.data()) s += v * v;
      return s;
    };
    const Tensor g = finite_difference_gradient(f, Tensor(Shape{2}, {1, 0}), Real(1e-5));
    CHECK(std::abs(g[0] - 2) < 1e-8);
    CHECK(std::abs(g[1]) < 1e-8);
  }

  TEST_CASE("finite differences of a constant") {
    const Tensor g = finite_difference_gradient([](const Tensor&) { return Real(3); }, Tensor(Shape{4}, 1.0), Real(1e-5));
    for (Real v : g.data()) CHECK(v == 0);
  }

  TEST_CASE("relative_error") {
    CHECK(relative_error(Tensor(Shape{2}, {1, 2}), Tensor(Shape{2}, {1, 2})) == 0);
    CHECK(relative_error(Tensor(Shape{1}, {1.1}), Tensor(Shape{1}, {1})) == doctest::Approx(0.1).epsilon(1e-9));
  }

  TEST_CASE("serial and parallel kernels are bit-identical") {
    Rng rng(11);
    for (const auto& [m, k, n] : std::vector<std::array<std::size_t, 3>>{{1, 1, 1}, {7, 13, 5}, {64, 288, 128}}) {
      for (int ta = 0; ta < 2; ++ta) {
        for (int tb = 0; tb < 2; ++tb) {
          const Tensor a = random_tensor(Shape{m * k}, rng), b = random_tensor(Shape{k * n}, rng);
          Tensor c1 = random_tensor(Shape{m * n}, rng);
          Tensor c2 = c1;
          kernels::GemmArgs args{a.ptr(), b.ptr(), c1.ptr(), m, k, n, ta ? kernels::Transpose::kYes : kernels::Transpose::kNo,
                                 tb ? kernels::Transpose::kYes : kernels::Transpose::kNo, true};
          kernels::serial::gemm(args);
          args.c = c2.ptr();
          kernels::parallel::gemm(args);
          CHECK(max_abs_diff(c1, c2) == 0);
        }
      }
    }
    const std::size_t batch = 5, m = 9, k = 9, n = 16;
    const Tensor a = random_tensor(Shape{batch * m * k}, rng), b = random_tensor(Shape{batch * k * n}, rng);
    Tensor c1(Shape{batch * m * n}), c2(Shape{batch * m * n});
    kernels::GemmArgs args{a.ptr(), b.ptr(), c1.ptr(), m, k, n};
    kernels::serial::batched_gemm(args, batch);
    args.c = c2.ptr();
    kernels::parallel::batched_gemm(args, batch);
    CHECK(max_abs_diff(c1, c2) == 0);
  }

  TEST_CASE("gemm matches a naive triple loop") {
    Rng rng(12);
    const std::size_t m = 4, k = 6, n = 3;
    const Tensor a = random_tensor(Shape{m * k}, rng), b = random_tensor(Shape{n * k}, rng);
    Tensor c(Shape{m * n});
    kernels::gemm({a.ptr(), b.ptr(), c.ptr(), m, k, n, kernels::Transpose::kNo, kernels::Transpose::kYes});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        Real s = 0;
        for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
        CHECK(std::abs(c[i * n + j] - s) < 1e-12);
      }
    }
  }

  TEST_CASE("thread cap") {
    const int before = kernels::max_threads();
    kernels::set_max_threads(1);
    CHECK(kernels::max_threads() == 1);
    kernels::set_max_threads(before);
  }

  TEST_CASE("rng streams are reproducible and independent") {
    Rng a(42), b(42);
    for (int i = 0; i < 10; ++i) CHECK(a() == b());
    Rng s0 = Rng(42).split(0), s1 = Rng(42).split(1);
    CHECK(s0() != s1());
    Rng u(7);
    double sum = 0, sum_sq = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double x = u.normal();
      sum += x;
      sum_sq += x * x;
    }
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(std::abs(sum_sq / n - 1) < 0.02);
    for (int i = 0; i < 1000; ++i) {
      const Real x = u.uniform();
      CHECK(x >= 0);
      CHECK(x < 1);
      CHECK(u.below(7) < 7);
    }
  }
}
