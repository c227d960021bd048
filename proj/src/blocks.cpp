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

#include "lsst/blocks.hpp"

#include <cmath>

#include "lsst/errors.hpp"
#include "lsst/ops.hpp"

namespace lsst::blocks {

namespace {

Tensor xavier(const Shape& shape, double fan_in, double fan_out, const Rng& stream) {
  Rng rng = stream;
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t(shape);
  for (auto& v : t.data()) v = static_cast<double>(static_cast<float>(rng.uniform(-limit, limit)));
  return t;
}

std::string join(const std::string& prefix, const std::string& leaf) {
  return prefix.empty() ? leaf : prefix + "." + leaf;
}

// Conv weights [k, k, cin/groups, cout] plus bias [cout].
void add_conv(ParameterStore& store, const std::string& name, std::size_t k, std::size_t cin,
              std::size_t cout, std::size_t groups, const Rng& rng) {
  const Shape shape{k, k, cin / groups, cout};
  const double fan_in = static_cast<double>(k * k * (cin / groups));
  const double fan_out = static_cast<double>(k * k * (cout / groups));
  const std::string wname = name + ".weight";
  store.add(wname, xavier(shape, fan_in, fan_out, rng.fork(wname)));
  store.add(name + ".bias", Tensor({cout}, 0.0));
}

// Transposed conv [k, k, cout, cin] (the layout of the matching forward conv)
// plus bias [cout].
void add_transposed_conv(ParameterStore& store, const std::string& name, std::size_t k,
                         std::size_t cin, std::size_t cout, const Rng& rng) {
  const std::string wname = name + ".weight";
  store.add(wname, xavier({k, k, cout, cin}, static_cast<double>(k * k * cin),
                          static_cast<double>(k * k * cout), rng.fork(wname)));
  store.add(name + ".bias", Tensor({cout}, 0.0));
}

void add_projection(ParameterStore& store, const std::string& name, std::size_t cg,
                    const Rng& rng) {
  store.add(name, xavier({cg, cg}, static_cast<double>(cg), static_cast<double>(cg),
                         rng.fork(name)));
}

Var conv(const ParameterBinding& p, const std::string& name, Var x, const Conv2dOptions& opt) {
  return ops::conv2d(x, p.get(name, "weight"), p.get(name, "bias"), opt);
}

std::string block_name(const std::string& stage, std::size_t i) {
  return stage + ".block" + std::to_string(i);
}

}  // namespace

Var lscb(Var x, const LscbWeights& w) {
  const std::size_t c = x.shape().back();
  const std::size_t k = w.dw_w.shape()[0];
  Var h = ops::conv2d(x, w.dw_w, w.dw_b, Conv2dOptions::same(k, c));
  h = ops::gelu(h);
  h = ops::conv2d(h, w.expand_w, w.expand_b, {});
  h = ops::gelu(h);
  h = ops::conv2d(h, w.reduce_w, w.reduce_b, {});
  return ops::add(x, h);
}

Var lsstb(Var x, std::size_t groups, const LsstbWeights& w) {
  const std::size_t c = x.shape().back();
  const std::size_t k = w.fuse_dw_w.shape()[0];
  Var merged = ops::add(attention::sstb(x, groups, w.sstb), lscb(x, w.lscb));
  Var h = ops::conv2d(merged, w.fuse_dw_w, w.fuse_dw_b, Conv2dOptions::same(k, c));
  h = ops::conv2d(h, w.fuse_pw_w, w.fuse_pw_b, {});
  return ops::add(x, h);
}

void add_sstb_params(ParameterStore& store, const std::string& prefix, std::size_t channels,
                     std::size_t groups, const Rng& rng) {
  const auto g = attention::SpectrumGrouping::make(channels, groups);
  store.add(join(prefix, "norm.gamma"), Tensor({channels}, 1.0));
  store.add(join(prefix, "norm.beta"), Tensor({channels}, 0.0));
  for (const char* phase : {"local", "nonlocal"}) {
    for (const char* m : {"wq", "wk", "wv"}) {
      add_projection(store, join(prefix, std::string(phase) + "." + m), g.width, rng);
    }
  }
}

void add_lscb_params(ParameterStore& store, const std::string& prefix, std::size_t channels,
                     const ModelConfig& cfg, const Rng& rng) {
  const std::size_t wide = channels * cfg.ffn_expansion;
  add_conv(store, join(prefix, "dw"), cfg.dw_kernel, channels, channels, channels, rng);
  add_conv(store, join(prefix, "expand"), 1, channels, wide, 1, rng);
  add_conv(store, join(prefix, "reduce"), 1, wide, channels, 1, rng);
}

void add_lsstb_params(ParameterStore& store, const std::string& prefix, std::size_t channels,
                      const ModelConfig& cfg, const Rng& rng) {
  add_sstb_params(store, join(prefix, "sstb"), channels, cfg.groups, rng);
  add_lscb_params(store, join(prefix, "lscb"), channels, cfg, rng);
  add_conv(store, join(prefix, "fuse.dw"), cfg.fusion_kernel, channels, channels, channels, rng);
  add_conv(store, join(prefix, "fuse.pw"), 1, channels, channels, 1, rng);
}

attention::SstbWeights bind_sstb(const ParameterBinding& b, const std::string& prefix) {
  auto proj = [&](const char* phase) {
    const std::string p = join(prefix, phase);
    return attention::ProjectionWeights{b.get(p, "wq"), b.get(p, "wk"), b.get(p, "wv")};
  };
  return {b[join(prefix, "norm.gamma")], b[join(prefix, "norm.beta")], proj("local"),
          proj("nonlocal")};
}

LscbWeights bind_lscb(const ParameterBinding& b, const std::string& prefix) {
  return {b[join(prefix, "dw.weight")],     b[join(prefix, "dw.bias")],
          b[join(prefix, "expand.weight")], b[join(prefix, "expand.bias")],
          b[join(prefix, "reduce.weight")], b[join(prefix, "reduce.bias")]};
}

LsstbWeights bind_lsstb(const ParameterBinding& b, const std::string& prefix) {
  return {bind_sstb(b, join(prefix, "sstb")),
          bind_lscb(b, join(prefix, "lscb")),
          b[join(prefix, "fuse.dw.weight")],
          b[join(prefix, "fuse.dw.bias")],
          b[join(prefix, "fuse.pw.weight")],
          b[join(prefix, "fuse.pw.bias")]};
}

std::vector<std::string> block_prefixes(const ModelConfig& cfg) {
  std::vector<std::string> out;
  auto stage = [&](const std::string& name, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(block_name(name, i));
  };
  stage("enc0", cfg.repeats[0]);
  stage("enc1", cfg.repeats[1]);
  stage("bottleneck", cfg.repeats[2]);
  stage("dec1", cfg.repeats[1]);
  stage("dec0", cfg.repeats[0]);
  return out;
}

namespace {

void build_network(ParameterStore& store, const ModelConfig& cfg, const std::string& prefix,
                   const Rng& rng) {
  const std::size_t c0 = cfg.stage_channels(0), c1 = cfg.stage_channels(1),
                    c2 = cfg.stage_channels(2);
  add_conv(store, join(prefix, "shallow"), 3, cfg.bands + 1, c0, 1, rng);
  const std::size_t stage_width[] = {c0, c1, c2};
  auto blocks_for = [&](const std::string& stage, std::size_t n, std::size_t width) {
    for (std::size_t i = 0; i < n; ++i) {
      add_lsstb_params(store, join(prefix, block_name(stage, i)), width, cfg, rng);
    }
  };
  blocks_for("enc0", cfg.repeats[0], stage_width[0]);
  add_conv(store, join(prefix, "down0"), 4, c0, c1, 1, rng);
  blocks_for("enc1", cfg.repeats[1], stage_width[1]);
  add_conv(store, join(prefix, "down1"), 4, c1, c2, 1, rng);
  blocks_for("bottleneck", cfg.repeats[2], stage_width[2]);
  add_transposed_conv(store, join(prefix, "up1"), 2, c2, c1, rng);
  add_conv(store, join(prefix, "fuse1"), 1, 2 * c1, c1, 1, rng);
  blocks_for("dec1", cfg.repeats[1], stage_width[1]);
  add_transposed_conv(store, join(prefix, "up0"), 2, c1, c0, rng);
  add_conv(store, join(prefix, "fuse0"), 1, 2 * c0, c0, 1, rng);
  blocks_for("dec0", cfg.repeats[0], stage_width[0]);
  // Zero output conv: the untrained network returns x0 unchanged.
  store.add(join(prefix, "out.weight"), Tensor({3, 3, c0, cfg.bands}, 0.0));
  store.add(join(prefix, "out.bias"), Tensor({cfg.bands}, 0.0));
}

std::string step_prefix(const ModelConfig& cfg, std::size_t step) {
  return cfg.cascade_steps() == 1 ? std::string() : "step" + std::to_string(step);
}

// Step 0 draws from the base seed so that step 0 of a cascade matches a
// standalone network built with the same seed.
Rng step_stream(std::uint64_t seed, std::size_t step) {
  Rng base(seed);
  return step == 0 ? base : base.fork(static_cast<std::uint64_t>(step));
}

}  // namespace

ParameterStore build_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParameterStore store;
  for (std::size_t s = 0; s < cfg.cascade_steps(); ++s) {
    ParameterStore step_store;
    build_network(step_store, cfg, "", step_stream(seed, s));
    const std::string prefix = step_prefix(cfg, s);
    for (auto& e : step_store.entries()) store.add(join(prefix, e.name), std::move(e.value));
  }
  return store;
}

Var lsst_network(const ParameterBinding& p, const ModelConfig& cfg, const std::string& prefix,
                 Var x0, const Tensor& mask) {
  const Shape& s = x0.shape();
  if (s.size() != 3 || s[2] != cfg.bands) {
    throw DimensionError("network input must be [H,W," + std::to_string(cfg.bands) + "], got " +
                         shape_str(s));
  }
  if (s[0] % 4 != 0 || s[1] % 4 != 0) {
    throw ConfigError("spatial size " + std::to_string(s[0]) + "x" + std::to_string(s[1]) +
                      " must be divisible by 4");
  }
  if (mask.shape() != Shape{s[0], s[1]}) {
    throw DimensionError("mask " + shape_str(mask.shape()) + " does not match input " +
                         shape_str(s));
  }
  Tape& tape = p.tape();
  auto name = [&](const std::string& leaf) { return join(prefix, leaf); };
  auto run_blocks = [&](Var x, const std::string& stage, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      x = lsstb(x, cfg.groups, bind_lsstb(p, name(block_name(stage, i))));
    }
    return x;
  };
  const Conv2dOptions down{2, 1, 1};

  Var mask_channel = tape.constant(mask.reshaped({s[0], s[1], 1}));
  Var x = conv(p, name("shallow"), ops::concat_channels({x0, mask_channel}),
               Conv2dOptions::same(3));
  Var skip0 = run_blocks(x, "enc0", cfg.repeats[0]);
  Var skip1 = run_blocks(conv(p, name("down0"), skip0, down), "enc1", cfg.repeats[1]);
  Var bottom = run_blocks(conv(p, name("down1"), skip1, down), "bottleneck", cfg.repeats[2]);

  Var up1 = ops::transposed_conv2d(bottom, p.get(name("up1"), "weight"),
                                   p.get(name("up1"), "bias"));
  Var dec1 = conv(p, name("fuse1"), ops::concat_channels({up1, skip1}), {});
  dec1 = run_blocks(dec1, "dec1", cfg.repeats[1]);

  Var up0 = ops::transposed_conv2d(dec1, p.get(name("up0"), "weight"),
                                   p.get(name("up0"), "bias"));
  Var dec0 = conv(p, name("fuse0"), ops::concat_channels({up0, skip0}), {});
  dec0 = run_blocks(dec0, "dec0", cfg.repeats[0]);

  Var out = conv(p, name("out"), dec0, Conv2dOptions::same(3));
  return ops::add(x0, out);
}

std::vector<Var> lsst_cascade(const ParameterBinding& p, const ModelConfig& cfg, const Tensor& y,
                              const cassi::SensingOperator& op) {
  cfg.validate();
  Tape& tape = p.tape();
  Var estimate = tape.constant(cassi::shift_back_init(y, op, cfg.bands));
  std::vector<Var> outputs;
  for (std::size_t s = 0; s < cfg.cascade_steps(); ++s) {
    estimate = lsst_network(p, cfg, step_prefix(cfg, s), estimate, op.mask());
    outputs.push_back(estimate);
  }
  return outputs;
}

Var lsst_forward(const ParameterBinding& p, const ModelConfig& cfg, const Tensor& y,
                 const cassi::SensingOperator& op) {
  return lsst_cascade(p, cfg, y, op).back();
}

Tensor reconstruct(const ParameterStore& store, const ModelConfig& cfg, const Tensor& y,
                   const cassi::SensingOperator& op, MacCounter* counter) {
  Tape tape;
  tape.set_counter(counter);
  ParameterBinding binding(tape, store, /*trainable=*/false);
  return lsst_forward(binding, cfg, y, op).value();
}

}  // namespace lsst::blocks
