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

#include "lsst/cassi.hpp"

#include <algorithm>
#include <cmath>

#include "lsst/errors.hpp"
#include "lsst/rng.hpp"

namespace lsst::cassi {

void validate_cube(const Tensor& cube) {
  if (cube.rank() != 3) {
    throw DimensionError("cube must be [H,W,bands], got " + shape_str(cube.shape()));
  }
  for (std::size_t i = 0; i < cube.size(); ++i) {
    if (!std::isfinite(cube[i])) throw NumericError("cube: non-finite value at element " + std::to_string(i));
    if (cube[i] < 0.0) throw DomainError("cube: negative value at element " + std::to_string(i));
  }
}

SensingOperator::SensingOperator(Tensor mask, std::size_t step)
    : mask_(std::move(mask)), step_(step) {
  if (step_ == 0) throw ConfigError("dispersion step must be positive");
  if (mask_.rank() != 2) {
    throw DimensionError("mask must be [H,W], got " + shape_str(mask_.shape()));
  }
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (!(mask_[i] >= 0.0 && mask_[i] <= 1.0)) {
      throw DomainError("mask value outside [0,1] at element " + std::to_string(i));
    }
  }
}

std::size_t SensingOperator::measurement_width(std::size_t bands) const {
  if (bands == 0) throw ConfigError("bands must be at least 1");
  return width() + step_ * (bands - 1);
}

namespace {

void check_cube_matches(const Tensor& cube, const SensingOperator& op) {
  if (cube.rank() != 3 || cube.dim(0) != op.height() || cube.dim(1) != op.width()) {
    throw DimensionError("cube " + shape_str(cube.shape()) + " does not match mask " +
                         shape_str(op.mask().shape()));
  }
}

void check_measurement_matches(const Tensor& y, const SensingOperator& op, std::size_t bands) {
  const Shape expected{op.height(), op.measurement_width(bands)};
  if (y.shape() != expected) {
    throw DimensionError("measurement " + shape_str(y.shape()) + " does not match expected " +
                         shape_str(expected) + " for " + std::to_string(bands) + " bands");
  }
}

}  // namespace

Tensor forward_sense(const Tensor& cube, const SensingOperator& op, const NoiseSpec& noise) {
  validate_cube(cube);
  check_cube_matches(cube, op);
  const std::size_t h = op.height(), w = op.width(), bands = cube.dim(2), d = op.step();
  const std::size_t wy = op.measurement_width(bands);
  Tensor y({h, wy});
  const Tensor& mask = op.mask();
  for (std::size_t k = 0; k < bands; ++k) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        y[i * wy + j + d * k] += mask[i * w + j] * cube.at(i, j, k);
      }
    }
  }
  if (noise.kind == NoiseKind::kGaussian) {
    if (noise.sigma < 0.0) throw ConfigError("noise sigma must be nonnegative");
    Rng rng(noise.seed);
    for (auto& v : y.data()) v += noise.sigma * rng.normal();
  }
  return y;
}

Tensor adjoint_sense(const Tensor& y, const SensingOperator& op, std::size_t bands) {
  check_measurement_matches(y, op, bands);
  const std::size_t h = op.height(), w = op.width(), d = op.step();
  const std::size_t wy = y.dim(1);
  Tensor x({h, w, bands});
  const Tensor& mask = op.mask();
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t k = 0; k < bands; ++k)
        x.at(i, j, k) = mask[i * w + j] * y[i * wy + j + d * k];
  return x;
}

Tensor shift_back_init(const Tensor& y, const SensingOperator& op, std::size_t bands) {
  check_measurement_matches(y, op, bands);
  const std::size_t h = op.height(), w = op.width(), d = op.step();
  const std::size_t wy = y.dim(1);
  Tensor x({h, w, bands});
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t k = 0; k < bands; ++k) x.at(i, j, k) = y[i * wy + j + d * k];
  return x;
}

Tensor synth_scene(std::size_t height, std::size_t width, std::size_t bands,
                   std::uint64_t seed, std::size_t blobs) {
  if (blobs == 0) throw ConfigError("synth_scene: need at least one blob");
  if (height == 0 || width == 0 || bands == 0) throw ConfigError("synth_scene: empty cube");
  Rng rng(seed);
  Tensor cube({height, width, bands});
  const double extent = static_cast<double>(std::min(height, width));
  std::vector<double> spectrum(bands);
  for (std::size_t b = 0; b < blobs; ++b) {
    const double ci = rng.uniform(0.0, static_cast<double>(height));
    const double cj = rng.uniform(0.0, static_cast<double>(width));
    const double sigma = rng.uniform(extent / 10.0, extent / 3.0);
    const double amp = rng.uniform(0.3, 0.8);
    // Quadratic spectrum through random values at the two ends and the middle.
    const double s0 = rng.uniform(), s1 = rng.uniform(), s2 = rng.uniform();
    for (std::size_t k = 0; k < bands; ++k) {
      const double t = bands > 1 ? static_cast<double>(k) / static_cast<double>(bands - 1) : 0.0;
      const double v = s0 * (1 - t) * (1 - 2 * t) + s1 * 4 * t * (1 - t) + s2 * t * (2 * t - 1);
      spectrum[k] = std::clamp(v, 0.0, 1.0);
    }
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t i = 0; i < height; ++i) {
      for (std::size_t j = 0; j < width; ++j) {
        const double di = static_cast<double>(i) - ci, dj = static_cast<double>(j) - cj;
        const double g = amp * std::exp(-(di * di + dj * dj) * inv);
        for (std::size_t k = 0; k < bands; ++k) cube.at(i, j, k) += g * spectrum[k];
      }
    }
  }
  for (auto& v : cube.data()) v = std::clamp(v, 0.0, 1.0);
  return cube;
}

Tensor random_mask(std::size_t height, std::size_t width, double density, std::uint64_t seed) {
  if (!(density > 0.0 && density <= 1.0)) throw ConfigError("mask density must be in (0, 1]");
  Rng rng(seed);
  Tensor mask({height, width});
  for (auto& v : mask.data()) v = rng.bernoulli(density) ? 1.0 : 0.0;
  return mask;
}

}  // namespace lsst::cassi
