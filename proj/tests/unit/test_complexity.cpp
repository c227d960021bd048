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

#include <cmath>
#include <map>

#include "lsst/blocks.hpp"
#include "lsst/complexity.hpp"

using namespace lsst;
using namespace lsst::complexity;

TEST_CASE("attention cost formulas") {
  CHECK(attention_flops(AttentionVariant::kGlobal, 4, 4, 4, 0, 0) == 2048);
  CHECK(attention_flops(AttentionVariant::kWindow, 8, 8, 4, 2, 0) == 2 * 4 * 64 * 4);
  CHECK(attention_flops(AttentionVariant::kSpectral, 8, 8, 8, 0, 0) == 2 * 64 * 64);
  CHECK(attention_flops(AttentionVariant::kSeparateSpectral, 8, 8, 8, 0, 2) == 2048);
}

TEST_CASE("separate spectral attention costs 1/G of spectral attention") {
  for (std::size_t hw : {4u, 8u, 16u, 32u})
    for (std::size_t c : {4u, 8u, 12u, 28u, 32u})
      for (std::size_t g : {1u, 2u, 4u}) {
        if (c % g) continue;
        const auto s = attention_flops(AttentionVariant::kSpectral, hw, hw, c, 0, 0);
        const auto ss = attention_flops(AttentionVariant::kSeparateSpectral, hw, hw, c, 0, c / g);
        const auto gl = attention_flops(AttentionVariant::kGlobal, hw, hw, c, 0, 0);
        CHECK(ss * g == s);
        CHECK(gl * (c / g) == ss * hw * hw);
      }
}

TEST_CASE("analytic parameter counts equal the built stores") {
  for (Variant v : {Variant::kS, Variant::kM, Variant::kL, Variant::kPlus}) {
    for (const ModelConfig& cfg : {ModelConfig::toy(v), ModelConfig::preset(v)}) {
      const ParamReport r = count_params(cfg);
      const ParameterStore st = blocks::build_model(cfg, 0);
      CHECK(r.total == st.total_parameters());
      std::map<std::string, std::uint64_t> by_module;
      for (const auto& e : st.entries()) {
        by_module[e.name.substr(0, e.name.rfind('.'))] += e.value.size();
      }
      std::map<std::string, std::uint64_t> analytic;
      for (const auto& l : r.layers) analytic[l.name] += l.params;
      CHECK(by_module == analytic);
    }
  }
}

TEST_CASE("instrumented multiply-adds equal the analytic inventory") {
  for (Variant v : {Variant::kS, Variant::kL, Variant::kPlus})
    for (auto [h, w] : {std::pair<std::size_t, std::size_t>{8, 8}, {16, 12}}) {
      const ModelConfig cfg = ModelConfig::toy(v);
      const MacCounter got = instrumented_macs(cfg, h, w);
      const FlopReport want = count_model_flops(cfg, h, w);
      CHECK(got.macs == want.by_category.macs);
      CHECK(want.flops == 2 * want.total_macs);
      CHECK(want.attention_macs == want.by_category[MacCategory::kAttention]);
    }
}

TEST_CASE("attention work is linear in the pixel count") {
  const ModelConfig cfg = ModelConfig::toy();
  const auto a = count_model_flops(cfg, 16, 16).attention_macs;
  const auto b = count_model_flops(cfg, 32, 16).attention_macs;
  CHECK(b == 2 * a);
}

TEST_CASE("audit report at the published scale") {
  const ComplexityReport rep = audit(ModelConfig::preset(Variant::kS),
                                     {Variant::kS, Variant::kM, Variant::kL, Variant::kPlus}, 256,
                                     256, 8, 8);
  CHECK(rep.enumeration_ok);
  CHECK(rep.instrumented_ok);
  REQUIRE(rep.rows.size() == 4);
  CHECK(rep.ss_msa * 4 == rep.s_msa);
  CHECK(rep.rows[0].target.params == 0.69e6);
  CHECK(rep.rows[0].target.gflops == 8.37);
  CHECK(std::abs(rep.rows[0].params_rel_diff) <= 0.30);
  CHECK(std::abs(rep.rows[0].macs_rel_diff) <= 0.30);
  for (std::size_t i = 1; i < 4; ++i) CHECK(rep.rows[i].params > rep.rows[i - 1].params);
  const std::string table = rep.to_table();
  CHECK(table.find("LSST-S") != std::string::npos);
  CHECK(table.find("SS-MSA / S-MSA = 0.25") != std::string::npos);
  CHECK(rep.to_csv().find("LSST-Plus,") != std::string::npos);
}
