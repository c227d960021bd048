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

#include "lsst/optim.hpp"

#include <cmath>
#include <unordered_map>

#include "lsst/errors.hpp"

namespace lsst {

OptimizerState OptimizerState::for_store(const ParameterStore& store, AdamConfig config) {
  OptimizerState s;
  s.config = config;
  for (const auto& e : store.entries()) {
    s.names.push_back(e.name);
    s.m.emplace_back(e.value.shape(), 0.0);
    s.v.emplace_back(e.value.shape(), 0.0);
  }
  return s;
}

void adam_step(OptimizerState& state, ParameterStore& params,
               const std::vector<Tape::NamedGrad>& grads) {
  if (state.names.size() != params.size()) {
    throw ConfigError("adam: optimizer state tracks " + std::to_string(state.names.size()) +
                      " parameters, store has " + std::to_string(params.size()));
  }
  std::unordered_map<std::string_view, const Tensor*> by_name;
  for (const auto& g : grads) by_name.emplace(g.name, &g.grad);

  // Validate everything before mutating anything.
  for (std::size_t p = 0; p < state.names.size(); ++p) {
    const auto& entry = params.entries()[p];
    if (entry.name != state.names[p]) {
      throw ConfigError("adam: parameter order mismatch at '" + entry.name + "'");
    }
    auto it = by_name.find(entry.name);
    if (it == by_name.end()) continue;
    if (!it->second->same_shape(entry.value)) {
      throw DimensionError("adam: gradient shape " + shape_str(it->second->shape()) +
                           " for parameter '" + entry.name + "' of shape " +
                           shape_str(entry.value.shape()));
    }
    if (!it->second->all_finite()) {
      throw NumericError("adam: non-finite gradient for parameter '" + entry.name + "'");
    }
  }

  ++state.step;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t p = 0; p < state.names.size(); ++p) {
    Tensor& value = params.entries()[p].value;
    auto it = by_name.find(state.names[p]);
    const Tensor* g = it == by_name.end() ? nullptr : it->second;
    Tensor& m = state.m[p];
    Tensor& v = state.v[p];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double gi = g ? (*g)[i] : 0.0;
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      double updated = value[i] - c.lr * mhat / (std::sqrt(vhat) + c.eps);
      if (c.single_precision) updated = static_cast<double>(static_cast<float>(updated));
      value[i] = updated;
    }
  }
}

}  // namespace lsst
