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

#ifndef LSST_METRICS_HPP_
#define LSST_METRICS_HPP_

#include <cstddef>
#include <vector>

#include "lsst/tensor.hpp"

namespace lsst::metrics {

inline constexpr double kPsnrCap = 100.0;

// Cubes are [H, W, bands]. Every metric is computed per band (or per pixel
// for SAM) and then averaged.
struct MetricReport {
  double psnr = 0.0;  // dB, mean over bands
  double ssim = 0.0;  // mean over bands
  double sam = 0.0;   // degrees, mean over valid pixels
  std::vector<double> psnr_bands;
  std::vector<double> ssim_bands;
  std::size_t sam_pixels = 0;
};

std::vector<double> psnr_bands(const Tensor& truth, const Tensor& estimate,
                               double data_range = 1.0);
double psnr(const Tensor& truth, const Tensor& estimate, double data_range = 1.0);

// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, evaluated at every position where the window fits.
std::vector<double> ssim_bands(const Tensor& truth, const Tensor& estimate,
                               double data_range = 1.0);
double ssim(const Tensor& truth, const Tensor& estimate, double data_range = 1.0);
// SSIM of two [H, W] images.
double ssim_image(const Tensor& a, const Tensor& b, double data_range = 1.0);

// Mean spectral angle in degrees. Pixels whose spectrum is all zero in
// either cube are skipped; throws DomainError if none remain.
double sam(const Tensor& truth, const Tensor& estimate, std::size_t* valid_pixels = nullptr);

MetricReport evaluate(const Tensor& truth, const Tensor& estimate, double data_range = 1.0);

// Pearson correlation between every pair of flattened bands. Constant bands
// correlate 1 with themselves and 0 with everything else.
struct CorrelationMap {
  std::size_t bands = 0;
  std::vector<double> values;  // row-major bands x bands

  double at(std::size_t i, std::size_t j) const { return values[i * bands + j]; }
};

CorrelationMap band_correlation_map(const Tensor& cube);

// Mean correlation of adjacent band pairs vs pairs at least bands/2 apart.
struct DiagonalDominance {
  double near = 0.0;
  double far = 0.0;
};
DiagonalDominance diagonal_dominance(const CorrelationMap& map);

}  // namespace lsst::metrics

#endif  // LSST_METRICS_HPP_
