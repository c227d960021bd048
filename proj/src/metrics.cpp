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

#include "lsst/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "lsst/errors.hpp"

namespace lsst::metrics {

namespace {

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;

void check_pair(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || !a.same_shape(b)) {
    throw DimensionError("metrics: cubes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " must be equal-shaped [H,W,bands]");
  }
}

Tensor band(const Tensor& cube, std::size_t k) {
  const std::size_t h = cube.dim(0), w = cube.dim(1), n = cube.dim(2);
  Tensor out({h, w});
  for (std::size_t p = 0; p < h * w; ++p) out[p] = cube[p * n + k];
  return out;
}

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> g{};
  double s = 0.0;
  for (std::size_t i = 0; i < kWindow; ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(kWindow / 2);
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    s += g[i];
  }
  for (auto& v : g) v /= s;
  return g;
}

// Separable Gaussian filter, "valid" region only.
Tensor filter_valid(const Tensor& img, const std::array<double, kWindow>& g) {
  const std::size_t h = img.dim(0), w = img.dim(1);
  const std::size_t oh = h - kWindow + 1, ow = w - kWindow + 1;
  Tensor rows({h, ow});
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < kWindow; ++t) acc += g[t] * img[i * w + j + t];
      rows[i * ow + j] = acc;
    }
  Tensor out({oh, ow});
  for (std::size_t i = 0; i < oh; ++i)
    for (std::size_t j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < kWindow; ++t) acc += g[t] * rows[(i + t) * ow + j];
      out[i * ow + j] = acc;
    }
  return out;
}

}  // namespace

std::vector<double> psnr_bands(const Tensor& truth, const Tensor& estimate, double data_range) {
  check_pair(truth, estimate);
  const std::size_t n = truth.dim(2);
  const std::size_t pixels = truth.size() / n;
  std::vector<double> mse(n, 0.0);
  for (std::size_t p = 0; p < pixels; ++p)
    for (std::size_t k = 0; k < n; ++k) {
      const double d = truth[p * n + k] - estimate[p * n + k];
      mse[k] += d * d;
    }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double m = mse[k] / static_cast<double>(pixels);
    out[k] = m == 0.0 ? kPsnrCap
                      : std::min(kPsnrCap, 10.0 * std::log10(data_range * data_range / m));
  }
  return out;
}

double psnr(const Tensor& truth, const Tensor& estimate, double data_range) {
  const auto v = psnr_bands(truth, estimate, data_range);
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double ssim_image(const Tensor& a, const Tensor& b, double data_range) {
  if (a.rank() != 2 || !a.same_shape(b)) {
    throw DimensionError("ssim: images " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  if (a.dim(0) < kWindow || a.dim(1) < kWindow) {
    throw ConfigError("ssim: image " + shape_str(a.shape()) + " smaller than the 11x11 window");
  }
  const auto g = gaussian_taps();
  Tensor aa = a, bb = b, ab = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const Tensor mu_a = filter_valid(a, g), mu_b = filter_valid(b, g);
  const Tensor e_aa = filter_valid(aa, g), e_bb = filter_valid(bb, g), e_ab = filter_valid(ab, g);
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  double acc = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma, vb = e_bb[i] - mb * mb, cov = e_ab[i] - ma * mb;
    acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return acc / static_cast<double>(mu_a.size());
}

std::vector<double> ssim_bands(const Tensor& truth, const Tensor& estimate, double data_range) {
  check_pair(truth, estimate);
  std::vector<double> out;
  for (std::size_t k = 0; k < truth.dim(2); ++k) {
    out.push_back(ssim_image(band(truth, k), band(estimate, k), data_range));
  }
  return out;
}

double ssim(const Tensor& truth, const Tensor& estimate, double data_range) {
  const auto v = ssim_bands(truth, estimate, data_range);
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sam(const Tensor& truth, const Tensor& estimate, std::size_t* valid_pixels) {
  check_pair(truth, estimate);
  const std::size_t n = truth.dim(2);
  const std::size_t pixels = truth.size() / n;
  double acc = 0.0;
  std::size_t valid = 0;
  for (std::size_t p = 0; p < pixels; ++p) {
    double d = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double a = truth[p * n + k], b = estimate[p * n + k];
      d += a * b;
      na += a * a;
      nb += b * b;
    }
    if (na == 0.0 || nb == 0.0) continue;
    const double c = std::clamp(d / std::sqrt(na * nb), -1.0, 1.0);
    acc += std::acos(c) * 180.0 / std::numbers::pi;
    ++valid;
  }
  if (valid_pixels) *valid_pixels = valid;
  if (valid == 0) throw DomainError("sam: every pixel has a zero spectrum; angle undefined");
  return acc / static_cast<double>(valid);
}

MetricReport evaluate(const Tensor& truth, const Tensor& estimate, double data_range) {
  MetricReport r;
  r.psnr_bands = psnr_bands(truth, estimate, data_range);
  r.ssim_bands = ssim_bands(truth, estimate, data_range);
  for (double v : r.psnr_bands) r.psnr += v;
  for (double v : r.ssim_bands) r.ssim += v;
  r.psnr /= static_cast<double>(r.psnr_bands.size());
  r.ssim /= static_cast<double>(r.ssim_bands.size());
  r.sam = sam(truth, estimate, &r.sam_pixels);
  return r;
}

CorrelationMap band_correlation_map(const Tensor& cube) {
  if (cube.rank() != 3) throw DimensionError("correlation map: expected [H,W,bands]");
  const std::size_t n = cube.dim(2);
  const std::size_t pixels = cube.size() / n;
  if (pixels < 2) throw ConfigError("correlation map: need at least two pixels");
  std::vector<double> mean(n, 0.0);
  for (std::size_t p = 0; p < pixels; ++p)
    for (std::size_t k = 0; k < n; ++k) mean[k] += cube[p * n + k];
  for (auto& m : mean) m /= static_cast<double>(pixels);
  std::vector<double> cov(n * n, 0.0);
  for (std::size_t p = 0; p < pixels; ++p)
    for (std::size_t i = 0; i < n; ++i) {
      const double di = cube[p * n + i] - mean[i];
      for (std::size_t j = i; j < n; ++j) cov[i * n + j] += di * (cube[p * n + j] - mean[j]);
    }
  CorrelationMap map{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double r;
      if (i == j) {
        r = 1.0;
      } else if (cov[i * n + i] == 0.0 || cov[j * n + j] == 0.0) {
        r = 0.0;
      } else {
        r = std::clamp(cov[i * n + j] / std::sqrt(cov[i * n + i] * cov[j * n + j]), -1.0, 1.0);
      }
      map.values[i * n + j] = map.values[j * n + i] = r;
    }
  }
  return map;
}

DiagonalDominance diagonal_dominance(const CorrelationMap& map) {
  const std::size_t n = map.bands;
  DiagonalDominance d;
  std::size_t near = 0, far = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j - i == 1) {
        d.near += map.at(i, j);
        ++near;
      }
      if (2 * (j - i) >= n) {
        d.far += map.at(i, j);
        ++far;
      }
    }
  if (near) d.near /= static_cast<double>(near);
  if (far) d.far /= static_cast<double>(far);
  return d;
}

}  // namespace lsst::metrics
