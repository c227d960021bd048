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

#ifndef LSST_ATTENTION_HPP_
#define LSST_ATTENTION_HPP_

#include <cstddef>
#include <vector>

#include "lsst/tape.hpp"

// Separate spectral multi-head self-attention. Feature maps are [H, W, C] (or
// any rank with channels last); attention runs along the channel axis.
namespace lsst::attention {

// Contiguous channel partition into `groups` blocks of C / groups channels.
struct SpectrumGrouping {
  std::size_t groups;
  std::size_t width;  // channels per group

  static SpectrumGrouping make(std::size_t channels, std::size_t groups);
};

// W^Q, W^K, W^V, each [Cg, Cg], shared by all groups of one attention layer.
struct ProjectionWeights {
  Var wq, wk, wv;
};

std::vector<Var> spectrum_group(Var x, std::size_t groups);

// x_g: [N, Cg]. Q = x W^Q, K = x W^K, V = x W^V; A = softmax_rows(Q^T K / sqrt(Cg))
// is [Cg, Cg] with row i the weights of output channel i over input channels;
// the result is V A^T.
Var grouped_spectral_attention(Var x_g, const ProjectionWeights& w);

// Same computation returning the attention matrix as well (for inspection).
struct AttentionTrace {
  Var output;
  Var attention;
};
AttentionTrace grouped_spectral_attention_traced(Var x_g, const ProjectionWeights& w);

// Group, attend within each group, concatenate.
Var local_spectral_attention(Var x, std::size_t groups, const ProjectionWeights& w);

// Shuffle permutation as a source-index table: output channel j*G + h reads
// input channel h*Cg + j.
std::vector<std::size_t> shuffle_permutation(std::size_t channels, std::size_t groups);
std::vector<std::size_t> reverse_permutation(std::size_t channels, std::size_t groups);

Var spectrum_shuffle(Var x, std::size_t groups);
Var spectrum_reverse(Var x, std::size_t groups);

// local attention -> shuffle -> local attention (non-local phase) -> reverse.
Var ss_msa(Var x, std::size_t groups, const ProjectionWeights& local,
           const ProjectionWeights& nonlocal);

struct SstbWeights {
  Var norm_gamma, norm_beta;
  ProjectionWeights local, nonlocal;
};

// x + ss_msa(layer_norm(x)).
Var sstb(Var x, std::size_t groups, const SstbWeights& w);

}  // namespace lsst::attention

#endif  // LSST_ATTENTION_HPP_
