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

#ifndef LSST_CASSI_HPP_
#define LSST_CASSI_HPP_

#include <cstddef>
#include <cstdint>

#include "lsst/tensor.hpp"

// Single-disperser CASSI sensing. Cubes are [H, W, bands] tensors, masks
// [H, W], measurements [H, W + step * (bands - 1)]. Band k is shifted right by
// step * k columns (0-based band index).
namespace lsst::cassi {

// Checks that `cube` is a rank-3 nonnegative finite tensor.
void validate_cube(const Tensor& cube);

class SensingOperator {
 public:
  // `mask` is [H, W] with values in [0, 1].
  SensingOperator(Tensor mask, std::size_t step);

  const Tensor& mask() const noexcept { return mask_; }
  std::size_t height() const noexcept { return mask_.dim(0); }
  std::size_t width() const noexcept { return mask_.dim(1); }
  std::size_t step() const noexcept { return step_; }
  std::size_t measurement_width(std::size_t bands) const;

 private:
  Tensor mask_;
  std::size_t step_;
};

enum class NoiseKind { kNone, kGaussian };

// Additive noise applied after sensor integration.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::kNone;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

// y[i, j] = sum_k mask[i, j - d k] * x[i, j - d k, k] (+ noise).
Tensor forward_sense(const Tensor& cube, const SensingOperator& op,
                     const NoiseSpec& noise = {});

// Exact transpose of forward_sense without noise.
Tensor adjoint_sense(const Tensor& y, const SensingOperator& op, std::size_t bands);

// Band k is the [H, W] window of y starting at column d k.
Tensor shift_back_init(const Tensor& y, const SensingOperator& op, std::size_t bands);

// Sum of Gaussian blobs, each with a smooth low-order polynomial spectrum,
// clamped to [0, 1].
Tensor synth_scene(std::size_t height, std::size_t width, std::size_t bands,
                   std::uint64_t seed, std::size_t blobs = 6);

// i.i.d. Bernoulli(density) binary mask.
Tensor random_mask(std::size_t height, std::size_t width, double density, std::uint64_t seed);

}  // namespace lsst::cassi

#endif  // LSST_CASSI_HPP_
