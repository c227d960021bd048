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

#include "lsst/complexity.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "lsst/blocks.hpp"
#include "lsst/cassi.hpp"
#include "lsst/errors.hpp"

namespace lsst::complexity {

std::string attention_variant_name(AttentionVariant v) {
  switch (v) {
    case AttentionVariant::kGlobal: return "G-MSA";
    case AttentionVariant::kWindow: return "W-MSA";
    case AttentionVariant::kSpectral: return "S-MSA";
    case AttentionVariant::kSeparateSpectral: return "SS-MSA";
  }
  return "?";
}

std::uint64_t attention_flops(AttentionVariant variant, std::size_t height, std::size_t width,
                              std::size_t channels, std::size_t window, std::size_t group_width) {
  if (height == 0 || width == 0 || channels == 0) {
    throw ConfigError("attention_flops: sizes must be positive");
  }
  const std::uint64_t hw = static_cast<std::uint64_t>(height) * width;
  const std::uint64_t c = channels;
  switch (variant) {
    case AttentionVariant::kGlobal: return 2 * hw * hw * c;
    case AttentionVariant::kWindow:
      if (window == 0) throw ConfigError("attention_flops: window size must be positive");
      return 2 * static_cast<std::uint64_t>(window) * window * hw * c;
    case AttentionVariant::kSpectral: return 2 * hw * c * c;
    case AttentionVariant::kSeparateSpectral:
      if (group_width == 0 || channels % group_width != 0) {
        throw ConfigError("attention_flops: group width " + std::to_string(group_width) +
                          " does not divide " + std::to_string(channels) + " channels");
      }
      return 2 * hw * group_width * c;
  }
  throw ConfigError("attention_flops: invalid variant");
}

namespace {

// Builds the layer inventory. With height = width = 0 only parameters are
// filled in.
class Inventory {
 public:
  Inventory(const ModelConfig& cfg, std::size_t height, std::size_t width)
      : cfg_(cfg), h_(height), w_(width) {}

  std::vector<LayerCount> build() {
    for (std::size_t s = 0; s < cfg_.cascade_steps(); ++s) {
      prefix_ = cfg_.cascade_steps() == 1 ? "" : "step" + std::to_string(s) + ".";
      network();
    }
    return std::move(layers_);
  }

  std::uint64_t ancillary() const { return ancillary_; }

 private:
  std::uint64_t pixels(std::size_t stage) const {
    return static_cast<std::uint64_t>(h_ >> stage) * (w_ >> stage);
  }

  LayerCount& layer(const std::string& name) {
    layers_.push_back({prefix_ + name, 0, {}});
    return layers_.back();
  }

  // k x k conv, cin -> cout, grouped, producing stage-`stage` resolution.
  void conv(const std::string& name, std::size_t k, std::size_t cin, std::size_t cout,
            std::size_t groups, std::size_t out_stage) {
    LayerCount& l = layer(name);
    const std::uint64_t taps = static_cast<std::uint64_t>(k) * k * (cin / groups) * cout;
    l.params = taps + cout;
    l.macs.add(MacCategory::kConv, taps * pixels(out_stage));
  }

  // 2x2 stride-2 transposed conv from stage in_stage (wide) to in_stage - 1.
  void up(const std::string& name, std::size_t narrow, std::size_t wide, std::size_t in_stage) {
    LayerCount& l = layer(name);
    const std::uint64_t taps = 4ULL * narrow * wide;
    l.params = taps + narrow;
    l.macs.add(MacCategory::kTransposedConv, taps * pixels(in_stage));
  }

  void block(const std::string& name, std::size_t stage) {
    const std::size_t c = cfg_.stage_channels(stage);
    const std::size_t cg = c / cfg_.groups;
    const std::uint64_t px = pixels(stage);
    LayerCount& norm = layer(name + ".sstb.norm");
    norm.params = 2 * c;
    ancillary_ += px * c;
    for (const char* phase : {".sstb.local", ".sstb.nonlocal"}) {
      LayerCount& a = layer(name + phase);
      a.params = 3ULL * cg * cg;
      a.macs.add(MacCategory::kProjection, 3ULL * px * cg * c);
      if (px) {
        a.macs.add(MacCategory::kAttention,
                   attention_flops(AttentionVariant::kSeparateSpectral, h_ >> stage, w_ >> stage,
                                   c, 0, cg));
      }
      ancillary_ += static_cast<std::uint64_t>(cfg_.groups) * cg * cg;
    }
    const std::size_t wide = c * cfg_.ffn_expansion;
    conv(name + ".lscb.dw", cfg_.dw_kernel, c, c, c, stage);
    conv(name + ".lscb.expand", 1, c, wide, 1, stage);
    conv(name + ".lscb.reduce", 1, wide, c, 1, stage);
    ancillary_ += px * (c + wide);
    conv(name + ".fuse.dw", cfg_.fusion_kernel, c, c, c, stage);
    conv(name + ".fuse.pw", 1, c, c, 1, stage);
  }

  void stage_blocks(const std::string& stage_name, std::size_t n, std::size_t stage) {
    for (std::size_t i = 0; i < n; ++i) block(stage_name + ".block" + std::to_string(i), stage);
  }

  void network() {
    const std::size_t c0 = cfg_.stage_channels(0), c1 = cfg_.stage_channels(1),
                      c2 = cfg_.stage_channels(2);
    conv("shallow", 3, cfg_.bands + 1, c0, 1, 0);
    stage_blocks("enc0", cfg_.repeats[0], 0);
    conv("down0", 4, c0, c1, 1, 1);
    stage_blocks("enc1", cfg_.repeats[1], 1);
    conv("down1", 4, c1, c2, 1, 2);
    stage_blocks("bottleneck", cfg_.repeats[2], 2);
    up("up1", c1, c2, 2);
    conv("fuse1", 1, 2 * c1, c1, 1, 1);
    stage_blocks("dec1", cfg_.repeats[1], 1);
    up("up0", c0, c1, 1);
    conv("fuse0", 1, 2 * c0, c0, 1, 0);
    stage_blocks("dec0", cfg_.repeats[0], 0);
    conv("out", 3, c0, cfg_.bands, 1, 0);
  }

  const ModelConfig& cfg_;
  std::size_t h_, w_;
  std::string prefix_;
  std::vector<LayerCount> layers_;
  std::uint64_t ancillary_ = 0;
};

}  // namespace

ParamReport count_params(const ModelConfig& cfg) {
  cfg.validate();
  ParamReport r;
  r.layers = Inventory(cfg, 0, 0).build();
  for (const auto& l : r.layers) r.total += l.params;
  return r;
}

FlopReport count_model_flops(const ModelConfig& cfg, std::size_t height, std::size_t width) {
  cfg.validate();
  if (height == 0 || width == 0 || height % 4 != 0 || width % 4 != 0) {
    throw ConfigError("count_model_flops: H and W must be positive multiples of 4");
  }
  FlopReport r;
  Inventory inv(cfg, height, width);
  r.layers = inv.build();
  r.ancillary_elements = inv.ancillary();
  for (const auto& l : r.layers) {
    for (std::size_t c = 0; c < l.macs.macs.size(); ++c) r.by_category.macs[c] += l.macs.macs[c];
  }
  r.total_macs = r.by_category.total();
  r.flops = 2 * r.total_macs;
  r.attention_macs = r.by_category[MacCategory::kAttention];
  return r;
}

MacCounter instrumented_macs(const ModelConfig& cfg, std::size_t height, std::size_t width,
                             std::uint64_t seed) {
  const ParameterStore store = blocks::build_model(cfg, seed);
  const Tensor scene = cassi::synth_scene(height, width, cfg.bands, seed);
  const cassi::SensingOperator op(cassi::random_mask(height, width, 0.5, seed + 1), cfg.step);
  const Tensor y = cassi::forward_sense(scene, op);
  MacCounter counter;
  blocks::reconstruct(store, cfg, y, op, &counter);
  return counter;
}

PublishedTarget published_target(Variant v) {
  switch (v) {
    case Variant::kS: return {0.69e6, 8.37};
    case Variant::kM: return {0.85e6, 13.04};
    case Variant::kL: return {1.22e6, 16.35};
    case Variant::kPlus: return {1.35e6, 22.60};
  }
  return {0.0, 0.0};
}

ComplexityReport audit(const ModelConfig& base, const std::vector<Variant>& variants,
                       std::size_t height, std::size_t width, std::size_t window,
                       std::size_t verify_size) {
  ComplexityReport rep;
  rep.height = height;
  rep.width = width;
  rep.channels = base.channels;
  rep.groups = base.groups;
  rep.window = window;
  rep.group_width = base.channels / base.groups;
  rep.g_msa = attention_flops(AttentionVariant::kGlobal, height, width, base.channels, window, 0);
  rep.w_msa = attention_flops(AttentionVariant::kWindow, height, width, base.channels, window, 0);
  rep.s_msa = attention_flops(AttentionVariant::kSpectral, height, width, base.channels, window, 0);
  rep.ss_msa = attention_flops(AttentionVariant::kSeparateSpectral, height, width, base.channels,
                               window, rep.group_width);
  std::ostringstream note;
  for (Variant v : variants) {
    ModelConfig cfg = base;
    cfg.variant = v;
    cfg.repeats = ModelConfig::preset(v).repeats;
    AuditRow row;
    row.variant = v;
    row.params = count_params(cfg).total;
    const FlopReport fr = count_model_flops(cfg, height, width);
    row.macs = fr.total_macs;
    row.flops = fr.flops;
    row.attention_macs = fr.attention_macs;
    row.target = published_target(v);
    row.params_rel_diff = (static_cast<double>(row.params) - row.target.params) / row.target.params;
    row.macs_rel_diff =
        (static_cast<double>(row.macs) - row.target.gflops * 1e9) / (row.target.gflops * 1e9);
    row.enumerated_params = blocks::build_model(cfg, 0).total_parameters();
    if (row.enumerated_params != row.params) rep.enumeration_ok = false;
    if (verify_size > 0) {
      const MacCounter measured = instrumented_macs(cfg, verify_size, verify_size);
      const MacCounter expected = count_model_flops(cfg, verify_size, verify_size).by_category;
      if (measured.macs != expected.macs) {
        rep.instrumented_ok = false;
        note << variant_name(v) << ": instrumented " << measured.total() << " vs analytic "
             << expected.total() << "; ";
      }
    }
    rep.rows.push_back(row);
  }
  rep.instrumented_note = note.str();
  return rep;
}

std::string ComplexityReport::to_table() const {
  std::ostringstream os;
  os << "Complexity audit at " << height << "x" << width << ", C=" << channels << ", G=" << groups
     << " (Cg=" << group_width << ")\n\n";
  os << "Attention multiply-adds for one layer at H x W x C:\n";
  os << "  G-MSA  " << g_msa << "\n  W-MSA  " << w_msa << "  (M=" << window << ")\n  S-MSA  "
     << s_msa << "\n  SS-MSA " << ss_msa << "\n";
  os << std::setprecision(6) << "  SS-MSA / S-MSA = "
     << static_cast<double>(ss_msa) / static_cast<double>(s_msa) << "  (1/G = "
     << 1.0 / static_cast<double>(groups) << ")\n\n";
  os << std::left << std::setw(10) << "model" << std::right << std::setw(12) << "#params"
     << std::setw(10) << "ref" << std::setw(9) << "diff" << std::setw(12) << "GMACs"
     << std::setw(10) << "ref" << std::setw(9) << "diff" << std::setw(12) << "GFLOPs(2x)"
     << std::setw(14) << "attn MACs" << '\n';
  os << std::fixed;
  for (const auto& r : rows) {
    os << std::left << std::setw(10) << ("LSST-" + variant_name(r.variant)) << std::right
       << std::setw(11) << std::setprecision(3) << static_cast<double>(r.params) / 1e6 << "M"
       << std::setw(9) << std::setprecision(2) << r.target.params / 1e6 << "M" << std::setw(8)
       << std::setprecision(1) << 100.0 * r.params_rel_diff << "%" << std::setw(12)
       << std::setprecision(3) << static_cast<double>(r.macs) / 1e9 << std::setw(9)
       << std::setprecision(2) << r.target.gflops << "G" << std::setw(8) << std::setprecision(1)
       << 100.0 * r.macs_rel_diff << "%" << std::setw(12) << std::setprecision(3)
       << static_cast<double>(r.flops) / 1e9 << std::setw(14) << r.attention_macs << '\n';
  }
  os << "\nThe published FLOPs column counts one multiply-add as one operation (the same unit\n"
        "as the attention cost formulas), so it is compared against GMACs; GFLOPs(2x) counts\n"
        "multiply and add separately. The published base width and sampling kernels are not\n"
        "known, so the comparison is approximate.\n";
  os << "parameter enumeration: " << (enumeration_ok ? "match" : "MISMATCH") << '\n';
  os << "instrumented counters: " << (instrumented_ok ? "match" : "MISMATCH " + instrumented_note)
     << '\n';
  return os.str();
}

std::string ComplexityReport::to_csv() const {
  std::ostringstream os;
  os << "model,params,ref_params,params_rel_diff,macs,ref_gflops,macs_rel_diff,flops_2x,"
        "attention_macs,ss_msa_over_s_msa\r\n";
  os << std::setprecision(10);
  const double ratio = static_cast<double>(ss_msa) / static_cast<double>(s_msa);
  for (const auto& r : rows) {
    os << "LSST-" << variant_name(r.variant) << ',' << r.params << ',' << r.target.params << ','
       << r.params_rel_diff << ',' << r.macs << ',' << r.target.gflops << ',' << r.macs_rel_diff
       << ',' << r.flops << ',' << r.attention_macs << ',' << ratio << "\r\n";
  }
  return os.str();
}

}  // namespace lsst::complexity
