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
#include <numbers>

#include "lsst/cassi.hpp"
#include "lsst/errors.hpp"
#include "lsst/metrics.hpp"
#include "test_util.hpp"

using namespace lsst;
using namespace lsst::metrics;

namespace {

// SSIM with the full 11x11 Gaussian window evaluated directly at every valid
// position.
double brute_ssim(const Tensor& a, const Tensor& b) {
  const int h = static_cast<int>(a.dim(0)), w = static_cast<int>(a.dim(1));
  double win[11][11], z = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) z += (win[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5));
  const double c1 = 1e-4, c2 = 9e-4;
  double acc = 0;
  int count = 0;
  for (int r = 0; r + 11 <= h; ++r)
    for (int c = 0; c + 11 <= w; ++c) {
      double ma = 0, mb = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          ma += win[i][j] / z * a.at(r + i, c + j);
          mb += win[i][j] / z * b.at(r + i, c + j);
        }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const double da = a.at(r + i, c + j) - ma, db = b.at(r + i, c + j) - mb;
          va += win[i][j] / z * da * da;
          vb += win[i][j] / z * db * db;
          cov += win[i][j] / z * da * db;
        }
      acc += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return acc / count;
}

}  // namespace

TEST_CASE("identical cubes hit the metric optima") {
  const Tensor x = cassi::synth_scene(16, 16, 4, 1);
  const MetricReport r = evaluate(x, x);
  CHECK(r.psnr == kPsnrCap);
  CHECK(std::abs(r.ssim - 1.0) <= 1e-9);
  CHECK(r.sam == 0.0);
  CHECK(r.sam_pixels == 256);
}

TEST_CASE("psnr of a constant offset") {
  Tensor a({4, 4, 2}, 0.5), b({4, 4, 2}, 0.6);
  for (double p : psnr_bands(a, b)) CHECK(p == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(psnr(a, b, 2.0) == doctest::Approx(20.0 + 20.0 * std::log10(2.0)).epsilon(1e-12));
  Tensor c = a;
  c[0] += 1e-9;
  CHECK(psnr_bands(a, c)[0] == kPsnrCap);
}

TEST_CASE("ssim matches a brute-force window evaluation") {
  Rng rng(51);
  const Tensor a = testing::randu(rng, {16, 14});
  Tensor b = a;
  for (auto& v : b.data()) v = std::clamp(v + 0.1 * rng.normal(), 0.0, 1.0);
  CHECK(ssim_image(a, b) == doctest::Approx(brute_ssim(a, b)).epsilon(1e-10));
  CHECK(ssim_image(a, b) < 1.0);
  CHECK_THROWS_AS(ssim_image(Tensor({10, 20}), Tensor({10, 20})), ConfigError);
}

TEST_CASE("spectral angle of known spectra") {
  Tensor a({1, 1, 2}, std::vector<double>{1, 0});
  Tensor b({1, 1, 2}, std::vector<double>{1, 1});
  CHECK(sam(a, b) == doctest::Approx(45.0).epsilon(1e-13));
  Tensor c({1, 1, 2}, std::vector<double>{0, 3});
  CHECK(sam(a, c) == doctest::Approx(90.0).epsilon(1e-13));
}

TEST_CASE("spectral angle ignores spectrum scale") {
  Rng rng(52);
  const Tensor x = testing::randu(rng, {6, 6, 5}, 0.1, 1.0);
  const Tensor y = testing::randu(rng, {6, 6, 5}, 0.1, 1.0);
  const double base = sam(x, y);
  for (double s : {2.0, 0.5, 8.0, 0.125}) CHECK(sam(x, y * s) == base);
  for (double s : {3.7, 0.3}) CHECK(std::abs(sam(x, y * s) - base) < 1e-12);
  CHECK(sam(x, x * 2.0) == 0.0);
}

TEST_CASE("spectral angle skips zero spectra and rejects all-zero input") {
  Tensor a({1, 2, 2}, std::vector<double>{1, 0, 0, 0});
  Tensor b({1, 2, 2}, std::vector<double>{1, 1, 1, 1});
  std::size_t valid = 0;
  CHECK(sam(a, b, &valid) == doctest::Approx(45.0));
  CHECK(valid == 1);
  CHECK_THROWS_AS(sam(Tensor({1, 1, 2}), b.reshaped({2, 1, 2})), DimensionError);
  CHECK_THROWS_AS(sam(Tensor({2, 1, 2}), b.reshaped({2, 1, 2})), DomainError);
}

TEST_CASE("correlation map matches direct Pearson coefficients") {
  Rng rng(53);
  const Tensor x = testing::randu(rng, {5, 5, 3});
  const CorrelationMap m = band_correlation_map(x);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double mi = 0, mj = 0;
      for (std::size_t p = 0; p < 25; ++p) {
        mi += x[p * 3 + i] / 25;
        mj += x[p * 3 + j] / 25;
      }
      double sij = 0, sii = 0, sjj = 0;
      for (std::size_t p = 0; p < 25; ++p) {
        sij += (x[p * 3 + i] - mi) * (x[p * 3 + j] - mj);
        sii += (x[p * 3 + i] - mi) * (x[p * 3 + i] - mi);
        sjj += (x[p * 3 + j] - mj) * (x[p * 3 + j] - mj);
      }
      CHECK(m.at(i, j) == doctest::Approx(sij / std::sqrt(sii * sjj)).epsilon(1e-12));
    }
}

TEST_CASE("identical bands correlate perfectly") {
  Rng rng(54);
  const Tensor band = testing::randu(rng, {6, 6, 1});
  Tensor x({6, 6, 4});
  for (std::size_t p = 0; p < 36; ++p)
    for (std::size_t k = 0; k < 4; ++k) x[p * 4 + k] = band[p];
  for (double v : band_correlation_map(x).values) CHECK(v == 1.0);
}

TEST_CASE("synthetic scenes are dominated by near-diagonal correlation") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto d = diagonal_dominance(band_correlation_map(cassi::synth_scene(32, 32, 28, seed)));
    CHECK(d.near > d.far);
    CHECK(d.near > 0.9);
  }
}
