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

#include "lsst/config.hpp"

#include <algorithm>
#include <cctype>

#include "lsst/errors.hpp"

namespace lsst {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kS: return "S";
    case Variant::kM: return "M";
    case Variant::kL: return "L";
    case Variant::kPlus: return "Plus";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "s") return Variant::kS;
  if (lower == "m") return Variant::kM;
  if (lower == "l") return Variant::kL;
  if (lower == "plus" || lower == "p") return Variant::kPlus;
  throw ConfigError("unknown model variant '" + std::string(name) + "' (expected S, M, L or Plus)");
}

namespace {

std::array<std::size_t, 3> repeats_for(Variant v) {
  switch (v) {
    case Variant::kM: return {2, 2, 2};
    case Variant::kL: return {2, 3, 3};
    case Variant::kS:
    case Variant::kPlus: return {1, 1, 2};
  }
  return {1, 1, 2};
}

}  // namespace

ModelConfig ModelConfig::preset(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.repeats = repeats_for(v);
  return c;
}

ModelConfig ModelConfig::toy(Variant v) {
  ModelConfig c = preset(v);
  c.channels = 8;
  c.bands = 8;
  return c;
}

void ModelConfig::validate() const {
  if (channels == 0 || bands == 0) throw ConfigError("channels and bands must be positive");
  if (groups == 0) throw ConfigError("groups must be positive");
  for (std::size_t s = 0; s < 3; ++s) {
    if (stage_channels(s) % groups != 0) {
      throw ConfigError("stage " + std::to_string(s) + " width " +
                        std::to_string(stage_channels(s)) + " not divisible by " +
                        std::to_string(groups) + " groups");
    }
  }
  for (auto r : repeats) {
    if (r == 0) throw ConfigError("LSSTB repeat counts must be at least 1");
  }
  if (dw_kernel % 2 == 0 || fusion_kernel % 2 == 0) {
    throw ConfigError("depth-wise and fusion kernels must be odd");
  }
  if (ffn_expansion == 0) throw ConfigError("ffn expansion must be positive");
  if (step == 0) throw ConfigError("dispersion step must be positive");
  if (!(alpha > 0.0)) throw ConfigError("focal parameter alpha must be positive");
}

}  // namespace lsst
