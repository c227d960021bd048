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

#include "lsst/cassi.hpp"
#include "lsst/errors.hpp"
#include "test_util.hpp"

using namespace lsst;
using namespace lsst::cassi;

namespace {

// Dense Phi built from the sensing geometry: row (i, j') sums entries
// (i, j, k) with j' = j + d k, weighted by mask[i, j].
Tensor dense_phi(const Tensor& mask, std::size_t bands, std::size_t d) {
  const std::size_t h = mask.dim(0), w = mask.dim(1), wy = w + d * (bands - 1);
  Tensor phi({h * wy, h * w * bands});
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t k = 0; k < bands; ++k)
        phi.at(i * wy + j + d * k, (i * w + j) * bands + k) = mask.at(i, j);
  return phi;
}

}  // namespace

TEST_CASE("measurement width is W + d (N - 1)") {
  SensingOperator op(Tensor({256, 256}, 1.0), 2);
  CHECK(op.measurement_width(28) == 310);
  CHECK(SensingOperator(Tensor({4, 4}, 1.0), 3).measurement_width(1) == 4);
}

TEST_CASE("forward and adjoint equal the dense matrix and its transpose") {
  Rng rng(21);
  for (std::size_t d : {1u, 2u, 3u}) {
    const Tensor mask = random_mask(4, 5, 0.5, 100 + d);
    const SensingOperator op(mask, d);
    const Tensor phi = dense_phi(mask, 3, d);
    const Tensor x = testing::randu(rng, {4, 5, 3});
    const Tensor y = forward_sense(x, op);
    const Tensor yd = matmul(phi, x.reshaped({x.size(), 1}));
    CHECK(max_abs_diff(y.reshaped({y.size(), 1}), yd) < 1e-14);

    const Tensor g = testing::randn(rng, y.shape());
    Tensor phit({phi.dim(1), phi.dim(0)});
    for (std::size_t r = 0; r < phi.dim(0); ++r)
      for (std::size_t c = 0; c < phi.dim(1); ++c) phit.at(c, r) = phi.at(r, c);
    const Tensor xt = adjoint_sense(g, op, 3);
    CHECK(max_abs_diff(xt.reshaped({xt.size(), 1}), matmul(phit, g.reshaped({g.size(), 1}))) <
          1e-14);
  }
}

TEST_CASE("adjoint identity holds on random instances") {
  Rng rng(22);
  for (int t = 0; t < 100; ++t) {
    const Tensor mask = testing::randu(rng, {4, 4});
    const SensingOperator op(mask, 2);
    const Tensor x = testing::randu(rng, {4, 4, 3});
    const Tensor y = testing::randn(rng, {4, op.measurement_width(3)});
    const double lhs = dot(forward_sense(x, op), y);
    const double rhs = dot(x, adjoint_sense(y, op, 3));
    CHECK(std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300) < 1e-12);
  }
}

TEST_CASE("sensing is linear") {
  Rng rng(23);
  const SensingOperator op(random_mask(6, 6, 0.5, 5), 2);
  const Tensor a = testing::randu(rng, {6, 6, 4}), b = testing::randu(rng, {6, 6, 4});
  const Tensor lhs = forward_sense(a * 2.0 + b, op);
  const Tensor rhs = forward_sense(a, op) * 2.0 + forward_sense(b, op);
  CHECK(max_abs_diff(lhs, rhs) < 1e-13);
}

TEST_CASE("shift-back inverts the shift when bands do not overlap") {
  Rng rng(24);
  const Tensor x = testing::randu(rng, {3, 4, 3});
  const SensingOperator wide(Tensor({3, 4}, 1.0), 4);
  CHECK(shift_back_init(forward_sense(x, wide), wide, 3) == x);

  const Tensor single = testing::randu(rng, {5, 5, 1});
  const SensingOperator op(Tensor({5, 5}, 1.0), 2);
  CHECK(shift_back_init(forward_sense(single, op), op, 1) == single);
}

TEST_CASE("band k is shifted right by d k") {
  Tensor x({1, 3, 2});
  x.at(0, 0, 1) = 1.0;
  const SensingOperator op(Tensor({1, 3}, 1.0), 2);
  const Tensor y = forward_sense(x, op);
  CHECK(y.at(0, 2) == 1.0);
  CHECK(y.at(0, 0) == 0.0);
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(SensingOperator(Tensor({2, 2}, 1.5), 2), DomainError);
  CHECK_THROWS_AS(SensingOperator(Tensor({2, 2}, 1.0), 0), ConfigError);
  const SensingOperator op(Tensor({2, 2}, 1.0), 1);
  CHECK_THROWS_AS(forward_sense(Tensor({3, 2, 2}), op), DimensionError);
  CHECK_THROWS_AS(forward_sense(Tensor({2, 2, 2}, -1.0), op), DomainError);
  CHECK_THROWS_AS(shift_back_init(Tensor({2, 5}), op, 2), DimensionError);
}

TEST_CASE("noise is additive and repeatable") {
  const Tensor x = synth_scene(8, 8, 4, 3);
  const SensingOperator op(random_mask(8, 8, 0.5, 4), 2);
  const NoiseSpec n{NoiseKind::kGaussian, 0.01, 77};
  const Tensor a = forward_sense(x, op, n), b = forward_sense(x, op, n);
  CHECK(a == b);
  const Tensor clean = forward_sense(x, op);
  const double dev = max_abs_diff(a, clean);
  CHECK(dev > 0.0);
  CHECK(dev < 0.1);
}

TEST_CASE("synthetic scenes and masks are deterministic and in range") {
  const Tensor s = synth_scene(16, 16, 8, 5);
  CHECK(s == synth_scene(16, 16, 8, 5));
  CHECK_FALSE(s == synth_scene(16, 16, 8, 6));
  for (double v : s.data()) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
  }
  const Tensor m = random_mask(32, 32, 0.5, 1);
  double open = 0;
  for (double v : m.data()) {
    REQUIRE((v == 0.0 || v == 1.0));
    open += v;
  }
  CHECK(std::abs(open / 1024 - 0.5) < 0.08);
}
