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

#ifndef LSST_CONFIG_HPP_
#define LSST_CONFIG_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace lsst {

enum class Variant { kS, kM, kL, kPlus };

std::string variant_name(Variant v);
// Accepts "S", "M", "L", "Plus" (case-insensitive).
Variant parse_variant(std::string_view name);

struct ModelConfig {
  std::size_t channels = 28;  // base width C; stages use C, 2C, 4C
  std::size_t groups = 4;
  // LSSTB repeats: encoder stage 1, encoder stage 2, bottleneck. The decoder
  // mirrors the encoder.
  std::array<std::size_t, 3> repeats{1, 1, 2};
  std::size_t dw_kernel = 7;
  std::size_t fusion_kernel = 3;
  std::size_t ffn_expansion = 4;
  std::size_t bands = 28;
  std::size_t step = 2;
  double alpha = 0.5;
  Variant variant = Variant::kS;

  // Full-scale presets: 28 bands, C = 28, G = 4.
  static ModelConfig preset(Variant v);
  // Desk-scale presets: 8 bands, C = 8, G = 4.
  static ModelConfig toy(Variant v = Variant::kS);

  void validate() const;

  std::size_t cascade_steps() const { return variant == Variant::kPlus ? 3 : 1; }
  std::size_t stage_channels(std::size_t stage) const { return channels << stage; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace lsst

#endif  // LSST_CONFIG_HPP_
