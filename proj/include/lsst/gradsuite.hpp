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

#ifndef LSST_GRADSUITE_HPP_
#define LSST_GRADSUITE_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Finite-difference checks of every differentiable layer, block and a micro
// model, as run by `lsst gradcheck`.
namespace lsst::gradsuite {

enum class Scope { kLayer, kBlock, kModel, kAll };

// "layer", "block", "model" or "all".
Scope parse_scope(std::string_view name);

inline constexpr double kLayerTolerance = 1e-4;
inline constexpr double kModelTolerance = 1e-3;

struct Row {
  std::string name;
  std::string scope;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t coords = 0;
  bool pass() const { return max_rel_error < tolerance; }
};

std::vector<Row> run(Scope scope, std::uint64_t seed = 7);

std::string to_table(const std::vector<Row>& rows);

}  // namespace lsst::gradsuite

#endif  // LSST_GRADSUITE_HPP_
