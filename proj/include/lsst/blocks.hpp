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

#ifndef LSST_BLOCKS_HPP_
#define LSST_BLOCKS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "lsst/attention.hpp"
#include "lsst/cassi.hpp"
#include "lsst/config.hpp"
#include "lsst/params.hpp"
#include "lsst/rng.hpp"
#include "lsst/tape.hpp"

namespace lsst::blocks {

struct LscbWeights {
  Var dw_w, dw_b;          // [k, k, 1, C] depth-wise
  Var expand_w, expand_b;  // [1, 1, C, eC]
  Var reduce_w, reduce_b;  // [1, 1, eC, C]
};

// x + reduce(gelu(expand(gelu(dwconv(x))))).
Var lscb(Var x, const LscbWeights& w);

struct LsstbWeights {
  attention::SstbWeights sstb;
  LscbWeights lscb;
  Var fuse_dw_w, fuse_dw_b;  // [k, k, 1, C]
  Var fuse_pw_w, fuse_pw_b;  // [1, 1, C, C]
};

// x + pointwise(depthwise(sstb(x) + lscb(x))).
Var lsstb(Var x, std::size_t groups, const LsstbWeights& w);

// Parameter construction. Initialization is uniform Xavier with zero biases,
// unit/zero layer-norm affine and a zero output conv; every value is rounded to float so a
// store survives the f32 checkpoint format unchanged. Each tensor draws from
// its own stream keyed by name.
void add_sstb_params(ParameterStore& store, const std::string& prefix, std::size_t channels,
                     std::size_t groups, const Rng& rng);
void add_lscb_params(ParameterStore& store, const std::string& prefix, std::size_t channels,
                     const ModelConfig& cfg, const Rng& rng);
void add_lsstb_params(ParameterStore& store, const std::string& prefix, std::size_t channels,
                      const ModelConfig& cfg, const Rng& rng);

attention::SstbWeights bind_sstb(const ParameterBinding& b, const std::string& prefix);
LscbWeights bind_lscb(const ParameterBinding& b, const std::string& prefix);
LsstbWeights bind_lsstb(const ParameterBinding& b, const std::string& prefix);

// Names of the stage blocks, e.g. "enc0.block1", in network order.
std::vector<std::string> block_prefixes(const ModelConfig& cfg);

// Builds every parameter of the configured network (three independent
// cascade steps for Plus, prefixed "step0." .. "step2.").
ParameterStore build_model(const ModelConfig& cfg, std::uint64_t seed);

// One U-shaped network applied to an initial estimate `x0` ([H, W, bands])
// with the coded mask appended as an extra channel. `prefix` selects the
// cascade step ("" for single networks). Returns x0 + network(x0, mask).
Var lsst_network(const ParameterBinding& params, const ModelConfig& cfg, const std::string& prefix,
                 Var x0, const Tensor& mask);

// shift-back -> network (-> network -> network for Plus). Returns the output
// of every cascade step; the last entry is the reconstruction.
std::vector<Var> lsst_cascade(const ParameterBinding& params, const ModelConfig& cfg,
                              const Tensor& y, const cassi::SensingOperator& op);

Var lsst_forward(const ParameterBinding& params, const ModelConfig& cfg, const Tensor& y,
                 const cassi::SensingOperator& op);

// Inference convenience: binds `store` as constants on a private tape.
Tensor reconstruct(const ParameterStore& store, const ModelConfig& cfg, const Tensor& y,
                   const cassi::SensingOperator& op, MacCounter* counter = nullptr);

}  // namespace lsst::blocks

#endif  // LSST_BLOCKS_HPP_
