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

#ifndef LSST_COMPLEXITY_HPP_
#define LSST_COMPLEXITY_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lsst/config.hpp"
#include "lsst/tape.hpp"

// Closed-form parameter and multiply-add accounting. Counts are derived from
// the configuration alone and never from a built model, so they can be
// checked against ParameterStore enumeration and the instrumented kernels.
namespace lsst::complexity {

enum class AttentionVariant {
  kGlobal,            // 2 (HW)^2 C
  kWindow,            // 2 M^2 HW C
  kSpectral,          // 2 HW C^2
  kSeparateSpectral,  // 2 HW Cg C
};

std::string attention_variant_name(AttentionVariant v);

// The attention cost formulas, in multiply-adds (the leading 2 counts the
// score and the weighted-sum matmul). `window` is only used by kWindow and
// `group_width` only by kSeparateSpectral.
std::uint64_t attention_flops(AttentionVariant variant, std::size_t height, std::size_t width,
                              std::size_t channels, std::size_t window, std::size_t group_width);

struct LayerCount {
  std::string name;  // module path, e.g. "enc0.block0.lscb.dw"
  std::uint64_t params = 0;
  MacCounter macs;   // empty when computed without a spatial size
};

struct ParamReport {
  std::vector<LayerCount> layers;
  std::uint64_t total = 0;
};

ParamReport count_params(const ModelConfig& cfg);

struct FlopReport {
  std::vector<LayerCount> layers;
  MacCounter by_category;      // per-category multiply-adds
  std::uint64_t total_macs = 0;
  std::uint64_t flops = 0;     // 2 * total_macs
  // Multiply-adds of the SS-MSA score/weighted-sum matmuls only.
  std::uint64_t attention_macs = 0;
  // Element-wise work outside the matmul/conv kernels (softmax, layer norm,
  // GELU); not included in the totals above.
  std::uint64_t ancillary_elements = 0;
};

FlopReport count_model_flops(const ModelConfig& cfg, std::size_t height, std::size_t width);

// Runs one forward pass of a freshly built model with the multiply-add
// counter attached.
MacCounter instrumented_macs(const ModelConfig& cfg, std::size_t height, std::size_t width,
                             std::uint64_t seed = 0);

struct PublishedTarget {
  double params;  // parameters
  double gflops;  // as printed in the comparison table
};
PublishedTarget published_target(Variant v);

struct AuditRow {
  Variant variant;
  std::uint64_t params = 0;
  std::uint64_t enumerated_params = 0;
  std::uint64_t macs = 0;
  std::uint64_t flops = 0;
  std::uint64_t attention_macs = 0;
  PublishedTarget target{};
  double params_rel_diff = 0.0;  // (params - target) / target
  double macs_rel_diff = 0.0;    // (macs - target) / target
};

struct ComplexityReport {
  std::size_t height = 0, width = 0, channels = 0, groups = 0, window = 0, group_width = 0;
  // Per attention variant at the bottleneck-free base stage (H, W, C).
  std::uint64_t g_msa = 0, w_msa = 0, s_msa = 0, ss_msa = 0;
  std::vector<AuditRow> rows;
  bool instrumented_ok = true;   // kernel counters agree with the formulas
  bool enumeration_ok = true;    // analytic params agree with built stores
  std::string instrumented_note;

  std::string to_table() const;
  std::string to_csv() const;
};

// Audits every variant in `variants` built from `base` (channels, groups,
// bands) at H x W. Instrumented counts are taken at `verify_size` x
// `verify_size` to keep the run short; the formulas are size-independent.
ComplexityReport audit(const ModelConfig& base, const std::vector<Variant>& variants,
                       std::size_t height, std::size_t width, std::size_t window = 8,
                       std::size_t verify_size = 16);

}  // namespace lsst::complexity

#endif  // LSST_COMPLEXITY_HPP_
