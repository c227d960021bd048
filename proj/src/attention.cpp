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

#include "lsst/attention.hpp"

#include <cmath>

#include "lsst/errors.hpp"
#include "lsst/ops.hpp"

namespace lsst::attention {

SpectrumGrouping SpectrumGrouping::make(std::size_t channels, std::size_t groups) {
  if (groups == 0 || channels == 0 || channels % groups != 0) {
    throw ConfigError(std::to_string(channels) + " channels cannot be split into " +
                      std::to_string(groups) + " equal groups");
  }
  return {groups, channels / groups};
}

std::vector<Var> spectrum_group(Var x, std::size_t groups) {
  const auto g = SpectrumGrouping::make(x.shape().back(), groups);
  std::vector<Var> parts;
  parts.reserve(g.groups);
  for (std::size_t i = 0; i < g.groups; ++i) {
    parts.push_back(ops::slice_channels(x, i * g.width, g.width));
  }
  return parts;
}

AttentionTrace grouped_spectral_attention_traced(Var x_g, const ProjectionWeights& w) {
  if (x_g.shape().size() != 2) {
    throw DimensionError("grouped attention: expected [N, Cg], got " + shape_str(x_g.shape()));
  }
  const std::size_t cg = x_g.shape()[1];
  for (const Var* m : {&w.wq, &w.wk, &w.wv}) {
    if (m->shape() != Shape{cg, cg}) {
      throw DimensionError("grouped attention: projection " + shape_str(m->shape()) +
                           " for group width " + std::to_string(cg));
    }
  }
  Var q = ops::matmul(x_g, w.wq, MacCategory::kProjection);
  Var k = ops::matmul(x_g, w.wk, MacCategory::kProjection);
  Var v = ops::matmul(x_g, w.wv, MacCategory::kProjection);
  Var scores = ops::matmul(ops::transpose(q), k, MacCategory::kAttention);
  Var a = ops::softmax_rows(ops::scale(scores, 1.0 / std::sqrt(static_cast<double>(cg))));
  Var out = ops::matmul(v, ops::transpose(a), MacCategory::kAttention);
  return {out, a};
}

Var grouped_spectral_attention(Var x_g, const ProjectionWeights& w) {
  return grouped_spectral_attention_traced(x_g, w).output;
}

Var local_spectral_attention(Var x, std::size_t groups, const ProjectionWeights& w) {
  const Shape shape = x.shape();
  const std::size_t c = shape.back();
  Var tokens = ops::reshape(x, {x.size() / c, c});
  std::vector<Var> outs;
  for (Var part : spectrum_group(tokens, groups)) {
    outs.push_back(grouped_spectral_attention(part, w));
  }
  return ops::reshape(ops::concat_channels(outs), shape);
}

std::vector<std::size_t> shuffle_permutation(std::size_t channels, std::size_t groups) {
  const auto g = SpectrumGrouping::make(channels, groups);
  std::vector<std::size_t> src(channels);
  // [G, Cg] -> transpose -> [Cg, G]
  for (std::size_t h = 0; h < g.groups; ++h)
    for (std::size_t j = 0; j < g.width; ++j) src[j * g.groups + h] = h * g.width + j;
  return src;
}

std::vector<std::size_t> reverse_permutation(std::size_t channels, std::size_t groups) {
  const auto fwd = shuffle_permutation(channels, groups);
  std::vector<std::size_t> inv(channels);
  for (std::size_t pos = 0; pos < channels; ++pos) inv[fwd[pos]] = pos;
  return inv;
}

Var spectrum_shuffle(Var x, std::size_t groups) {
  return ops::permute_channels(x, shuffle_permutation(x.shape().back(), groups));
}

Var spectrum_reverse(Var x, std::size_t groups) {
  return ops::permute_channels(x, reverse_permutation(x.shape().back(), groups));
}

Var ss_msa(Var x, std::size_t groups, const ProjectionWeights& local,
           const ProjectionWeights& nonlocal) {
  Var local_out = local_spectral_attention(x, groups, local);
  Var shuffled = spectrum_shuffle(local_out, groups);
  Var mixed = local_spectral_attention(shuffled, groups, nonlocal);
  return spectrum_reverse(mixed, groups);
}

Var sstb(Var x, std::size_t groups, const SstbWeights& w) {
  Var normed = ops::layer_norm(x, w.norm_gamma, w.norm_beta);
  return ops::add(x, ss_msa(normed, groups, w.local, w.nonlocal));
}

}  // namespace lsst::attention
