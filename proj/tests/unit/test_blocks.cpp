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

#include <doctest.h>

#include "lsst/blocks.hpp"
#include "lsst/errors.hpp"
#include "test_util.hpp"

using namespace lsst;
using namespace lsst::blocks;

namespace {

double count(const ParameterStore& s) { return static_cast<double>(s.total_parameters()); }

ParameterStore with_random_output(ParameterStore st, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& e : st.entries())
    if (e.name.ends_with("out.weight"))
      for (auto& v : e.value.data()) v = 0.05 * rng.normal();
  return st;
}

}  // namespace

TEST_CASE("block parameter counts") {
  ModelConfig cfg = ModelConfig::toy();
  ParameterStore lscb_store;
  add_lscb_params(lscb_store, "b", 8, cfg, Rng(1));
  // 7x7 depth-wise (392 + 8), 1x1 expand 8->32 (256 + 32), 1x1 reduce 32->8 (256 + 8).
  CHECK(count(lscb_store) == 952);

  ParameterStore sstb_store;
  add_sstb_params(sstb_store, "b", 8, 4, Rng(1));
  CHECK(sstb_store.at("b.local.wq").shape() == Shape{2, 2});
  // Two phases of three 2x2 projections plus the layer-norm affine.
  CHECK(count(sstb_store) == 2 * 12 + 16);
}

TEST_CASE("zero fusion point-wise weights make lsstb the identity") {
  ModelConfig cfg = ModelConfig::toy();
  ParameterStore st;
  add_lsstb_params(st, "b", 8, cfg, Rng(2));
  for (auto& v : st.at("b.fuse.pw.weight").data()) v = 0.0;
  Rng rng(3);
  const Tensor x = testing::randn(rng, {4, 4, 8});
  Tape t;
  ParameterBinding b(t, st, false);
  CHECK(lsstb(t.constant(x), 4, bind_lsstb(b, "b")).value() == x);
}

TEST_CASE("model construction is deterministic and seed-dependent") {
  const ModelConfig cfg = ModelConfig::toy();
  const ParameterStore a = build_model(cfg, 5);
  CHECK(a == build_model(cfg, 5));
  CHECK_FALSE(a == build_model(cfg, 6));
  CHECK(a.contains("shallow.weight"));
  CHECK(a.contains("enc0.block0.sstb.local.wq"));
  CHECK(a.contains("bottleneck.block1.lscb.dw.weight"));
  CHECK(a.at("up1.weight").shape() == Shape{2, 2, 16, 32});
  CHECK(a.at("up1.bias").shape() == Shape{16});
  CHECK(a.at("shallow.weight").shape() == Shape{3, 3, 9, 8});
  for (const auto& e : a.entries())
    for (double v : e.value.data()) REQUIRE(static_cast<double>(static_cast<float>(v)) == v);
}

TEST_CASE("cascade steps are independent networks") {
  const ModelConfig plus = ModelConfig::toy(Variant::kPlus);
  const ParameterStore p = build_model(plus, 9);
  const ParameterStore s = build_model(ModelConfig::toy(Variant::kS), 9);
  CHECK(p.size() == 3 * s.size());
  CHECK(p.at("step0.enc0.block0.lscb.dw.weight") == s.at("enc0.block0.lscb.dw.weight"));
  CHECK_FALSE(p.at("step1.enc0.block0.lscb.dw.weight") == s.at("enc0.block0.lscb.dw.weight"));
}

TEST_CASE("an untrained network returns the shift-back estimate") {
  const ModelConfig cfg = ModelConfig::toy();
  const Tensor mask = cassi::random_mask(16, 16, 0.5, 1);
  const cassi::SensingOperator op(mask, cfg.step);
  const Tensor y = cassi::forward_sense(cassi::synth_scene(16, 16, 8, 2), op);
  CHECK(reconstruct(build_model(cfg, 3), cfg, y, op) == cassi::shift_back_init(y, op, 8));
}

TEST_CASE("forward pass shapes, cascade outputs and inference agree") {
  const ModelConfig cfg = ModelConfig::toy(Variant::kPlus);
  const ParameterStore st = with_random_output(build_model(cfg, 4), 8);
  const Tensor mask = cassi::random_mask(8, 12, 0.5, 1);
  const cassi::SensingOperator op(mask, cfg.step);
  const Tensor y = cassi::forward_sense(cassi::synth_scene(8, 12, 8, 2), op);
  Tape t;
  ParameterBinding b(t, st);
  const auto steps = lsst_cascade(b, cfg, y, op);
  REQUIRE(steps.size() == 3);
  CHECK(steps[2].shape() == Shape{8, 12, 8});
  CHECK_FALSE(steps[0].value() == steps[2].value());
  CHECK(reconstruct(st, cfg, y, op) == steps[2].value());
}

TEST_CASE("network input validation") {
  const ModelConfig cfg = ModelConfig::toy();
  const ParameterStore st = build_model(cfg, 1);
  Tape t;
  ParameterBinding b(t, st);
  CHECK_THROWS_AS(lsst_network(b, cfg, "", t.constant(Tensor({6, 8, 8})), Tensor({6, 8})),
                  ConfigError);
  CHECK_THROWS_AS(lsst_network(b, cfg, "", t.constant(Tensor({8, 8, 7})), Tensor({8, 8})),
                  DimensionError);
  CHECK_THROWS_AS(lsst_network(b, cfg, "", t.constant(Tensor({8, 8, 8})), Tensor({8, 4})),
                  DimensionError);
  CHECK_THROWS_AS((void)b["missing.weight"], ConfigError);
}

TEST_CASE("model configuration presets and validation") {
  CHECK(ModelConfig::preset(Variant::kM).repeats == std::array<std::size_t, 3>{2, 2, 2});
  CHECK(ModelConfig::preset(Variant::kL).repeats == std::array<std::size_t, 3>{2, 3, 3});
  CHECK(ModelConfig::preset(Variant::kS).channels == 28);
  CHECK(ModelConfig::toy().channels == 8);
  CHECK(parse_variant("plus") == Variant::kPlus);
  CHECK(parse_variant("m") == Variant::kM);
  CHECK_THROWS_AS(parse_variant("XL"), ConfigError);
  ModelConfig bad = ModelConfig::toy();
  bad.groups = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ModelConfig::toy();
  bad.dw_kernel = 4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
