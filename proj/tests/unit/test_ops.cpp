// Copyright 2026 The LSST Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>

#include "lsst/errors.hpp"
#include "lsst/gradcheck.hpp"
#include "lsst/gradsuite.hpp"
#include "lsst/ops.hpp"
#include "test_util.hpp"

using namespace lsst;
using testing::randn;

namespace {

// Direct cross-correlation with zero padding.
Tensor naive_conv(const Tensor& x, const Tensor& w, const Conv2dOptions& o) {
  const long h = static_cast<long>(x.dim(0)), wd = static_cast<long>(x.dim(1));
  const long k = static_cast<long>(w.dim(0)), cin_g = static_cast<long>(w.dim(2));
  const long cout = static_cast<long>(w.dim(3)), g = static_cast<long>(o.groups);
  const long s = static_cast<long>(o.stride), p = static_cast<long>(o.padding);
  const long ho = (h + 2 * p - k) / s + 1, wo = (wd + 2 * p - k) / s + 1;
  const long cout_g = cout / g;
  Tensor y({static_cast<std::size_t>(ho), static_cast<std::size_t>(wo),
            static_cast<std::size_t>(cout)});
  for (long i = 0; i < ho; ++i)
    for (long j = 0; j < wo; ++j)
      for (long co = 0; co < cout; ++co) {
        const long grp = co / cout_g;
        double acc = 0;
        for (long a = 0; a < k; ++a)
          for (long b = 0; b < k; ++b) {
            const long r = i * s + a - p, c = j * s + b - p;
            if (r < 0 || r >= h || c < 0 || c >= wd) continue;
            for (long ci = 0; ci < cin_g; ++ci) {
              acc += x.at(r, c, grp * cin_g + ci) * w[((a * k + b) * cin_g + ci) * cout + co];
            }
          }
        y.at(i, j, co) = acc;
      }
  return y;
}

// Scatter form of the transposed conv; w is [k, k, out, in].
Tensor naive_transposed(const Tensor& y, const Tensor& w, std::size_t s, std::size_t p) {
  const std::size_t k = w.dim(0), cout = w.dim(2), cin = w.dim(3);
  const std::size_t ho = (y.dim(0) - 1) * s + k - 2 * p, wo = (y.dim(1) - 1) * s + k - 2 * p;
  Tensor out({ho, wo, cout});
  for (std::size_t i = 0; i < y.dim(0); ++i)
    for (std::size_t j = 0; j < y.dim(1); ++j)
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
          const long r = static_cast<long>(i * s + a) - static_cast<long>(p);
          const long c = static_cast<long>(j * s + b) - static_cast<long>(p);
          if (r < 0 || c < 0 || r >= static_cast<long>(ho) || c >= static_cast<long>(wo)) continue;
          for (std::size_t co = 0; co < cout; ++co)
            for (std::size_t ci = 0; ci < cin; ++ci)
              out.at(r, c, co) += y.at(i, j, ci) * w[((a * k + b) * cout + co) * cin + ci];
        }
  return out;
}

}  // namespace

TEST_CASE("conv2d matches the direct loop for dense, strided and grouped kernels") {
  Rng rng(11);
  struct Case {
    Shape x, w;
    Conv2dOptions opt;
  };
  const Case cases[] = {
      {{5, 6, 3}, {3, 3, 3, 4}, Conv2dOptions::same(3)},
      {{8, 8, 2}, {4, 4, 2, 5}, {2, 1, 1}},
      {{7, 5, 4}, {7, 7, 1, 4}, Conv2dOptions::same(7, 4)},
      {{4, 4, 6}, {3, 3, 3, 4}, {1, 1, 2}},
      {{3, 3, 5}, {1, 1, 5, 2}, {}},
  };
  for (const auto& c : cases) {
    const Tensor x = randn(rng, c.x), w = randn(rng, c.w);
    const Tensor y = kernels::conv2d(x, w, c.opt);
    CHECK(max_abs_diff(y, naive_conv(x, w, c.opt)) < 1e-12);
  }
}

TEST_CASE("conv2d input adjoint satisfies <conv(x), g> = <x, adjoint(g)>") {
  Rng rng(12);
  const Tensor x = randn(rng, {6, 6, 3}), w = randn(rng, {4, 4, 3, 2});
  const Conv2dOptions opt{2, 1, 1};
  const Tensor y = kernels::conv2d(x, w, opt);
  const Tensor g = randn(rng, y.shape());
  const Tensor xt = kernels::conv2d_input_adjoint(g, w, x.shape(), opt);
  CHECK(dot(y, g) == doctest::Approx(dot(x, xt)).epsilon(1e-12));
}

TEST_CASE("transposed conv matches its scatter definition") {
  Rng rng(13);
  for (std::size_t p : {0u, 1u}) {
    const Tensor y = randn(rng, {3, 4, 5}), w = randn(rng, {2 + 2 * p, 2 + 2 * p, 3, 5});
    Tape t;
    Var out = ops::transposed_conv2d(t.constant(y), t.constant(w), Var{}, 2, p);
    CHECK(max_abs_diff(out.value(), naive_transposed(y, w, 2, p)) < 1e-12);
  }
}

TEST_CASE("conv rejects mismatched shapes") {
  Tape t;
  Var x = t.constant(Tensor({4, 4, 3}));
  CHECK_THROWS_AS(ops::conv2d(x, t.constant(Tensor({3, 3, 2, 4})), Var{}, {}), DimensionError);
  CHECK_THROWS_AS(ops::conv2d(x, t.constant(Tensor({3, 3, 3, 4})), t.constant(Tensor({5})), {}),
                  DimensionError);
}

TEST_CASE("softmax rows sum to one and survive large logits") {
  Tape t;
  Tensor a({2, 3}, std::vector<double>{1000, 1001, 1002, -5, 0, 5});
  const Tensor s = ops::softmax_rows(t.constant(a)).value();
  CHECK(s.all_finite());
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(s.at(r, 0) + s.at(r, 1) + s.at(r, 2) == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(s.at(0, 2) / s.at(0, 1) == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("layer norm gives zero mean and unit variance per position") {
  Rng rng(14);
  Tape t;
  const std::size_t c = 6;
  Var y = ops::layer_norm(t.constant(randn(rng, {3, 3, c}, 4.0)), t.constant(Tensor({c}, 1.0)),
                          t.constant(Tensor({c}, 0.0)), 0.0);
  for (std::size_t p = 0; p < 9; ++p) {
    double m = 0, v = 0;
    for (std::size_t k = 0; k < c; ++k) m += y.value()[p * c + k] / c;
    for (std::size_t k = 0; k < c; ++k) v += std::pow(y.value()[p * c + k] - m, 2) / c;
    CHECK(std::abs(m) < 1e-12);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("gelu uses the exact erf form") {
  CHECK(gelu_scalar(0.0) == 0.0);
  CHECK(gelu_scalar(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-15));
  CHECK(gelu_scalar(-1.0) == doctest::Approx(-0.15865525393145707).epsilon(1e-14));
}

TEST_CASE("channel slicing, concatenation and permutation") {
  Rng rng(15);
  Tape t;
  Var x = t.constant(randn(rng, {2, 2, 5}));
  Var a = ops::slice_channels(x, 0, 2), b = ops::slice_channels(x, 2, 3);
  CHECK(ops::concat_channels({a, b}).value() == x.value());
  Var p = ops::permute_channels(x, {4, 3, 2, 1, 0});
  CHECK(p.value().at(1, 0, 0) == x.value().at(1, 0, 4));
  CHECK_THROWS_AS(ops::permute_channels(x, {0, 0, 1, 2, 3}), DimensionError);
}

TEST_CASE("tape contract") {
  Tape t;
  Var x = t.variable(Tensor({2}, std::vector<double>{1, 2}), "x");
  Var unused = t.variable(Tensor({2}, 1.0), "unused");
  Var y = ops::sum(ops::mul(x, x));
  CHECK_THROWS_AS(t.backward(x), UsageError);
  t.backward(y);
  CHECK(t.grad(x)[1] == 4.0);
  CHECK(t.grad(unused) == Tensor({2}, 0.0));
  t.backward(y);
  CHECK(t.grad(x)[0] == 2.0);
  const auto named = t.parameter_gradients();
  REQUIRE(named.size() == 2);
  CHECK(named[0].name == "x");
  Tape other;
  CHECK_THROWS_AS(other.backward(y), UsageError);
}

TEST_CASE("multiply-add counters record matmul and conv work") {
  MacCounter counter;
  Tape t;
  t.set_counter(&counter);
  Rng rng(16);
  ops::matmul(t.constant(randn(rng, {3, 4})), t.constant(randn(rng, {4, 5})));
  CHECK(counter[MacCategory::kMatmul] == 60);
  ops::conv2d(t.constant(randn(rng, {4, 4, 2})), t.constant(randn(rng, {3, 3, 2, 3})), Var{},
              Conv2dOptions::same(3));
  CHECK(counter[MacCategory::kConv] == 16ULL * 9 * 2 * 3);
}

TEST_CASE("finite differences agree with every layer gradient") {
  for (const auto& row : gradsuite::run(gradsuite::Scope::kLayer)) {
    INFO(row.name);
    CHECK(row.max_rel_error < gradsuite::kLayerTolerance);
  }
}

TEST_CASE("grad_check detects a wrong gradient") {
  // A deliberately wrong op: value x^2 but gradient 3x.
  const ScalarFn bad = [](Tape& t, Var x) {
    Tensor v = x.value();
    for (auto& e : v.data()) e *= e;
    Var y = t.record(v, {x}, [x](Tape& tp, std::size_t self) {
      const Tensor& g = tp.output_grad(self);
      for (std::size_t i = 0; i < g.size(); ++i) tp.grad_buffer(x.id())[i] += 3 * x.value()[i] * g[i];
    });
    return ops::sum(y);
  };
  CHECK(grad_check(bad, Tensor({3}, std::vector<double>{1, 2, 3})) > 0.4);
}
