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

#include "lsst/gradsuite.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>

#include "lsst/attention.hpp"
#include "lsst/blocks.hpp"
#include "lsst/cassi.hpp"
#include "lsst/errors.hpp"
#include "lsst/gradcheck.hpp"
#include "lsst/loss.hpp"
#include "lsst/ops.hpp"
#include "lsst/rng.hpp"

namespace lsst::gradsuite {

namespace {

Tensor randn(Rng& rng, Shape shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = scale * rng.normal();
  return t;
}

// sum(out * r) for a fixed random r, so every output coordinate matters.
Var project(Tape& tape, Var out, std::uint64_t seed) {
  Rng rng(seed);
  return ops::sum(ops::mul(out, tape.constant(randn(rng, out.shape()))));
}

class Suite {
 public:
  explicit Suite(std::uint64_t seed) : rng_(seed) {}

  void check(const std::string& name, const std::string& scope, std::vector<Tensor> inputs,
             const std::function<Var(Tape&, const std::vector<Var>&)>& body,
             double tolerance = kLayerTolerance, std::size_t max_coords = 0) {
    const std::uint64_t proj_seed = rng_.next_u64();
    const MultiScalarFn f = [&](Tape& t, const std::vector<Var>& v) {
      return project(t, body(t, v), proj_seed);
    };
    const GradCheckResult r = grad_check(f, inputs, 1e-5, max_coords);
    rows_.push_back({name, scope, r.max_rel_error, tolerance, r.coords_checked});
  }

  Tensor randn(Shape shape, double scale = 1.0) { return gradsuite::randn(rng_, std::move(shape), scale); }
  Rng& rng() { return rng_; }
  std::vector<Row>& rows() { return rows_; }

 private:
  Rng rng_;
  std::vector<Row> rows_;
};

void layer_checks(Suite& s) {
  s.check("conv2d 3x3", "layer", {s.randn({5, 5, 3}), s.randn({3, 3, 3, 4}, 0.3), s.randn({4})},
          [](Tape&, const std::vector<Var>& v) {
            return ops::conv2d(v[0], v[1], v[2], Conv2dOptions::same(3));
          });
  s.check("conv2d 4x4 stride 2", "layer", {s.randn({6, 6, 2}), s.randn({4, 4, 2, 3}, 0.3)},
          [](Tape&, const std::vector<Var>& v) {
            return ops::conv2d(v[0], v[1], Var{}, Conv2dOptions{2, 1, 1});
          });
  s.check("depthwise conv 7x7", "layer", {s.randn({6, 6, 3}), s.randn({7, 7, 1, 3}, 0.2), s.randn({3})},
          [](Tape&, const std::vector<Var>& v) {
            return ops::conv2d(v[0], v[1], v[2], Conv2dOptions::same(7, 3));
          });
  s.check("pointwise conv 1x1", "layer", {s.randn({4, 4, 5}), s.randn({1, 1, 5, 2}), s.randn({2})},
          [](Tape&, const std::vector<Var>& v) {
            return ops::conv2d(v[0], v[1], v[2], Conv2dOptions{});
          });
  s.check("transposed conv 2x2 stride 2", "layer",
          {s.randn({3, 3, 4}), s.randn({2, 2, 2, 4}, 0.5), s.randn({2})},
          [](Tape&, const std::vector<Var>& v) { return ops::transposed_conv2d(v[0], v[1], v[2], 2, 0); });
  s.check("layer_norm", "layer", {s.randn({3, 4, 6}), s.randn({6}), s.randn({6})},
          [](Tape&, const std::vector<Var>& v) { return ops::layer_norm(v[0], v[1], v[2]); });
  s.check("gelu", "layer", {s.randn({4, 4, 3}, 2.0)},
          [](Tape&, const std::vector<Var>& v) { return ops::gelu(v[0]); });
  s.check("softmax_rows", "layer", {s.randn({4, 5}, 2.0)},
          [](Tape&, const std::vector<Var>& v) { return ops::softmax_rows(v[0]); });
  s.check("matmul", "layer", {s.randn({3, 4}), s.randn({4, 5})},
          [](Tape&, const std::vector<Var>& v) { return ops::matmul(v[0], v[1]); });
  s.check("grouped spectral attention", "layer",
          {s.randn({9, 3}), s.randn({3, 3}, 0.6), s.randn({3, 3}, 0.6), s.randn({3, 3}, 0.6)},
          [](Tape&, const std::vector<Var>& v) {
            return attention::grouped_spectral_attention(v[0], {v[1], v[2], v[3]});
          });
  s.check("spectrum shuffle", "layer", {s.randn({2, 2, 6})},
          [](Tape&, const std::vector<Var>& v) { return attention::spectrum_shuffle(v[0], 2); });

  // The focal weights are frozen at the evaluation point, so the reference is
  // the finite difference of sum_k w_k l_k / N with w held at its base value.
  {
    const Tensor truth = [&] {
      Tensor t = s.randn({4, 4, 3});
      for (auto& x : t.data()) x = std::abs(x);
      return t;
    }();
    Tensor pred = s.randn({4, 4, 3});
    Tape tape;
    Var p = tape.variable(pred);
    loss::BandLossReport rep;
    Var l = loss::focal_spectrum_loss(p, truth, 0.5, &rep);
    tape.backward(l);
    const Tensor g = tape.grad(p);
    const auto frozen = [&](const Tensor& x) {
      const auto rm = loss::band_rmse(truth, x);
      double acc = 0.0;
      for (std::size_t k = 0; k < rm.size(); ++k) acc += rep.weights[k] * rm[k];
      return acc / static_cast<double>(rm.size());
    };
    double worst = 0.0;
    const double h = 1e-5;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      Tensor a = pred, b = pred;
      a[i] += h;
      b[i] -= h;
      const double fd = (frozen(a) - frozen(b)) / (2 * h);
      worst = std::max(worst, std::abs(g[i] - fd) / std::max(1.0, std::abs(fd)));
    }
    s.rows().push_back({"focal spectrum loss", "layer", worst, kLayerTolerance, pred.size()});
  }
  {
    const Tensor truth = s.randn({3, 3, 2});
    s.check("rmse loss", "layer", {s.randn({3, 3, 2})},
            [truth](Tape&, const std::vector<Var>& v) { return loss::rmse_loss(v[0], truth); });
  }
}

ParameterStore perturbed(const ParameterStore& base, Rng& rng) {
  ParameterStore out;
  for (const auto& e : base.entries()) {
    Tensor t = e.value;
    if (e.name.ends_with("bias") || e.name.ends_with("beta")) {
      for (auto& v : t.data()) v = 0.1 * rng.normal();
    } else if (e.name.ends_with("gamma")) {
      for (auto& v : t.data()) v = 1.0 + 0.1 * rng.normal();
    } else if (std::all_of(t.data().begin(), t.data().end(), [](double v) { return v == 0.0; })) {
      for (auto& v : t.data()) v = 0.1 * rng.normal();
    }
    out.add(e.name, std::move(t));
  }
  return out;
}

void bound_check(Suite& s, const std::string& name, const std::string& scope,
                 const ParameterStore& store, Tensor x,
                 const std::function<Var(const ParameterBinding&, Var)>& body, double tolerance,
                 std::size_t max_coords) {
  std::vector<std::string> names;
  std::vector<Tensor> inputs;
  for (const auto& e : store.entries()) {
    names.push_back(e.name);
    inputs.push_back(e.value);
  }
  inputs.push_back(std::move(x));
  s.check(name, scope, std::move(inputs),
          [names, body](Tape& tape, const std::vector<Var>& v) {
            const std::vector<Var> params(v.begin(), v.end() - 1);
            ParameterBinding binding(tape, names, params);
            return body(binding, v.back());
          },
          tolerance, max_coords);
}

void block_checks(Suite& s) {
  ModelConfig cfg = ModelConfig::toy();
  cfg.channels = 6;
  cfg.groups = 2;
  cfg.dw_kernel = 3;
  cfg.ffn_expansion = 2;
  const std::size_t c = cfg.channels;
  Rng init(s.rng().next_u64());

  {
    ParameterStore st;
    blocks::add_sstb_params(st, "b", c, cfg.groups, init);
    st = perturbed(st, s.rng());
    bound_check(s, "ss_msa", "block", st, s.randn({3, 3, c}),
                [&](const ParameterBinding& b, Var x) {
                  const auto w = blocks::bind_sstb(b, "b");
                  return attention::ss_msa(x, cfg.groups, w.local, w.nonlocal);
                },
                kLayerTolerance, 0);
    bound_check(s, "sstb", "block", st, s.randn({3, 3, c}),
                [&](const ParameterBinding& b, Var x) {
                  return attention::sstb(x, cfg.groups, blocks::bind_sstb(b, "b"));
                },
                kLayerTolerance, 0);
  }
  {
    ParameterStore st;
    blocks::add_lscb_params(st, "b", c, cfg, init);
    st = perturbed(st, s.rng());
    bound_check(s, "lscb", "block", st, s.randn({4, 4, c}),
                [](const ParameterBinding& b, Var x) { return blocks::lscb(x, blocks::bind_lscb(b, "b")); },
                kLayerTolerance, 0);
  }
  {
    ParameterStore st;
    blocks::add_lsstb_params(st, "b", c, cfg, init);
    st = perturbed(st, s.rng());
    bound_check(s, "lsstb", "block", st, s.randn({3, 3, c}),
                [&](const ParameterBinding& b, Var x) {
                  return blocks::lsstb(x, cfg.groups, blocks::bind_lsstb(b, "b"));
                },
                kLayerTolerance, 0);
  }
}

void model_checks(Suite& s) {
  ModelConfig cfg = ModelConfig::toy();
  cfg.bands = 4;
  cfg.channels = 8;
  cfg.groups = 4;
  const std::size_t h = 8, w = 8;
  const ParameterStore st = perturbed(blocks::build_model(cfg, s.rng().next_u64()), s.rng());
  const Tensor mask = cassi::random_mask(h, w, 0.5, s.rng().next_u64());
  const cassi::SensingOperator op(mask, cfg.step);
  const Tensor scene = cassi::synth_scene(h, w, cfg.bands, s.rng().next_u64());
  const Tensor x0 = cassi::shift_back_init(cassi::forward_sense(scene, op), op, cfg.bands);
  bound_check(s, "lsst model 8x8x4", "model", st, x0,
              [&](const ParameterBinding& b, Var x) { return blocks::lsst_network(b, cfg, "", x, mask); },
              kModelTolerance, 4);
}

}  // namespace

Scope parse_scope(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (s == "layer") return Scope::kLayer;
  if (s == "block") return Scope::kBlock;
  if (s == "model") return Scope::kModel;
  if (s == "all") return Scope::kAll;
  throw UsageError("unknown gradcheck scope '" + std::string(name) +
                   "' (expected layer, block, model or all)");
}

std::vector<Row> run(Scope scope, std::uint64_t seed) {
  Suite s(seed);
  if (scope == Scope::kLayer || scope == Scope::kAll) layer_checks(s);
  if (scope == Scope::kBlock || scope == Scope::kAll) block_checks(s);
  if (scope == Scope::kModel || scope == Scope::kAll) model_checks(s);
  return std::move(s.rows());
}

std::string to_table(const std::vector<Row>& rows) {
  std::string out = "scope  name                              max_rel_err  tolerance  coords  result\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-6s %-33s %11.3e %10.0e %7zu  %s\n", r.scope.c_str(),
                  r.name.c_str(), r.max_rel_error, r.tolerance, r.coords, r.pass() ? "PASS" : "FAIL");
    out += line;
  }
  return out;
}

}  // namespace lsst::gradsuite
