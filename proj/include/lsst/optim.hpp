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

#ifndef LSST_OPTIM_HPP_
#define LSST_OPTIM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "lsst/params.hpp"
#include "lsst/tape.hpp"

namespace lsst {

struct AdamConfig {
  double lr = 4e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Round parameters to float after every update so they survive the f32
  // checkpoint format bit for bit.
  bool single_precision = false;
};

// First/second moments per parameter, in ParameterStore order.
struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::string> names;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static OptimizerState for_store(const ParameterStore& store, AdamConfig config);
};

// One bias-corrected Adam update. Parameters without a gradient entry are
// treated as having zero gradient. Throws NumericError naming the parameter
// when a gradient is not finite.
void adam_step(OptimizerState& state, ParameterStore& params,
               const std::vector<Tape::NamedGrad>& grads);

}  // namespace lsst

#endif  // LSST_OPTIM_HPP_
