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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lsst/errors.hpp"
#include "lsst/loss.hpp"
#include "test_util.hpp"

using namespace lsst;
using namespace lsst::loss;

TEST_CASE("focal weight values") {
  CHECK(focal_weight(0.0, 0.5) == 0.0);
  CHECK(std::abs(focal_weight(1.0, 0.5) - std::log(2.0)) < 1e-12);
  CHECK(focal_weight(0.25, 0.5) == doctest::Approx(std::log(1.5)).epsilon(1e-15));
  CHECK(focal_weight(0.04, 1.0) == doctest::Approx(std::log1p(0.04)).epsilon(1e-15));
  CHECK_THROWS_AS(focal_weight(-0.1, 0.5), DomainError);
  CHECK_THROWS_AS(focal_weight(0.1, 0.0), DomainError);
  CHECK_THROWS_AS(focal_weight(NAN, 0.5), DomainError);
}

TEST_CASE("focal weights rank bands exactly like their errors") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const double alpha = rng.uniform(0.1, 2.0);
    std::vector<double> l(12), w(12);
    for (std::size_t k = 0; k < l.size(); ++k) {
      l[k] = rng.uniform(0.0, 2.0);
      w[k] = focal_weight(l[k], alpha);
    }
    std::vector<std::size_t> by_l(l.size()), by_w(l.size());
    std::iota(by_l.begin(), by_l.end(), 0);
    by_w = by_l;
    std::sort(by_l.begin(), by_l.end(), [&](auto a, auto b) { return l[a] < l[b]; });
    std::sort(by_w.begin(), by_w.end(), [&](auto a, auto b) { return w[a] < w[b]; });
    CHECK(by_l == by_w);
  }
}

TEST_CASE("band RMSE matches a direct computation") {
  Rng rng(42);
  const Tensor a = testing::randu(rng, {5, 4, 3}), b = testing::randu(rng, {5, 4, 3});
  const auto r = band_rmse(a, b);
  for (std::size_t k = 0; k < 3; ++k) {
    double s = 0;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 4; ++j) s += std::pow(a.at(i, j, k) - b.at(i, j, k), 2);
    CHECK(r[k] == doctest::Approx(std::sqrt(s / 20)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(band_rmse(a, Tensor({5, 4, 2})), DimensionError);
}

TEST_CASE("focal spectrum loss is the weighted mean of band errors") {
  Tensor truth({2, 2, 2}, 0.5), pred = truth;
  // Band 0 off by 0.1 everywhere, band 1 off by 0.4.
  for (std::size_t p = 0; p < 4; ++p) {
    pred[p * 2] += 0.1;
    pred[p * 2 + 1] -= 0.4;
  }
  const auto rep = focal_spectrum_report(truth, pred, 0.5);
  CHECK(rep.rmse[0] == doctest::Approx(0.1));
  CHECK(rep.rmse[1] == doctest::Approx(0.4));
  const double expect = (std::log(std::sqrt(0.1) + 1) * 0.1 + std::log(std::sqrt(0.4) + 1) * 0.4) / 2;
  CHECK(rep.total == doctest::Approx(expect).epsilon(1e-12));
  Tape t;
  CHECK(focal_spectrum_loss(t.constant(pred), truth, 0.5).value()[0] ==
        doctest::Approx(expect).epsilon(1e-12));
  CHECK(rep.to_csv().starts_with("band,rmse,weight\r\n0,"));
}

TEST_CASE("focal loss is zero exactly at perfect reconstruction") {
  Rng rng(43);
  const Tensor truth = testing::randu(rng, {3, 3, 4});
  Tape t;
  Var p = t.variable(truth);
  Var l = focal_spectrum_loss(p, truth, 0.5);
  CHECK(l.value()[0] == 0.0);
  t.backward(l);
  const Tensor g = t.grad(p);
  CHECK(g.all_finite());
  CHECK(g == Tensor(truth.shape(), 0.0));

  Tensor off = truth;
  off[5] += 1e-6;
  Tape t2;
  CHECK(focal_spectrum_loss(t2.constant(off), truth, 0.5).value()[0] > 0.0);
}

TEST_CASE("focal weights are held fixed in the gradient") {
  Rng rng(44);
  const Tensor truth = testing::randu(rng, {3, 3, 2});
  const Tensor pred = testing::randu(rng, {3, 3, 2});
  Tape t;
  Var p = t.variable(pred);
  BandLossReport rep;
  t.backward(focal_spectrum_loss(p, truth, 0.5, &rep));
  const Tensor g = t.grad(p);
  // d/dp of w_k * l_k / N with w_k constant: w_k (p - y) / (N HW l_k).
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::size_t k = i % 2;
    const double want = rep.weights[k] * (pred[i] - truth[i]) / (2.0 * 9.0 * rep.rmse[k]);
    CHECK(g[i] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("rmse loss") {
  Tensor a({1, 2, 2}, std::vector<double>{0, 0, 0, 0});
  Tensor b({1, 2, 2}, std::vector<double>{1, 1, 1, 1});
  CHECK(rmse(a, b) == 1.0);
  Tape t;
  CHECK(rmse_loss(t.constant(b), a).value()[0] == 1.0);
}
