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
#include <set>

#include "lsst/attention.hpp"
#include "lsst/errors.hpp"
#include "lsst/ops.hpp"
#include "test_util.hpp"

using namespace lsst;
using namespace lsst::attention;
using testing::randn;

namespace {

using DepSets = std::vector<std::set<std::size_t>>;

// Output channel -> input channels it reads, found by perturbing one input
// channel at one pixel and watching every output channel.
DepSets traced_dependencies(const std::function<Var(Tape&, Var)>& f, const Tensor& x) {
  const std::size_t c = x.shape().back();
  Tape t0;
  const Tensor base = f(t0, t0.constant(x)).value();
  DepSets deps(c);
  for (std::size_t in = 0; in < c; ++in) {
    Tensor xp = x;
    xp[in] += 1e-3;
    Tape t;
    const Tensor y = f(t, t.constant(xp)).value();
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (std::abs(y[i] - base[i]) > 1e-14) deps[i % c].insert(in);
    }
  }
  return deps;
}

DepSets local_oracle(std::size_t c, std::size_t g) {
  const std::size_t cg = c / g;
  DepSets d(c);
  for (std::size_t o = 0; o < c; ++o)
    for (std::size_t in = 0; in < c; ++in)
      if (in / cg == o / cg) d[o].insert(in);
  return d;
}

// Symbolic reachability through local attention, the reshape/transpose
// shuffle, local attention again and the inverse reshape.
DepSets ss_msa_oracle(std::size_t c, std::size_t g) {
  const std::size_t cg = c / g;
  const DepSets first = local_oracle(c, g);
  // Shuffled position p = j * G + h holds channel h * Cg + j.
  auto channel_at = [&](std::size_t p) { return (p % g) * cg + p / g; };
  auto position_of = [&](std::size_t ch) { return (ch % cg) * g + ch / cg; };
  DepSets out(c);
  for (std::size_t o = 0; o < c; ++o) {
    const std::size_t q = position_of(o);
    for (std::size_t p = 0; p < c; ++p) {
      if (p / cg != q / cg) continue;
      const auto& s = first[channel_at(p)];
      out[o].insert(s.begin(), s.end());
    }
  }
  return out;
}

ProjectionWeights weights(Tape& t, Rng& rng, std::size_t cg) {
  return {t.constant(randn(rng, {cg, cg}, 0.7)), t.constant(randn(rng, {cg, cg}, 0.7)),
          t.constant(randn(rng, {cg, cg}, 0.7))};
}

}  // namespace

TEST_CASE("shuffle of 6 channels in 2 groups interleaves the groups") {
  CHECK(shuffle_permutation(6, 2) == std::vector<std::size_t>{0, 3, 1, 4, 2, 5});
  Tape t;
  Tensor x({1, 1, 6}, std::vector<double>{10, 11, 12, 13, 14, 15});
  CHECK(spectrum_shuffle(t.constant(x), 2).value().vec() ==
        std::vector<double>{10, 13, 11, 14, 12, 15});
}

TEST_CASE("reverse undoes shuffle exactly for every valid grouping") {
  Rng rng(31);
  for (std::size_t c = 1; c <= 64; ++c)
    for (std::size_t g = 1; g <= c; ++g) {
      if (c % g) continue;
      const auto s = shuffle_permutation(c, g), r = reverse_permutation(c, g);
      for (std::size_t i = 0; i < c; ++i) REQUIRE(s[r[i]] == i);
      Tape t;
      const Tensor x = randn(rng, {2, 1, c});
      REQUIRE(spectrum_reverse(spectrum_shuffle(t.constant(x), g), g).value() == x);
      REQUIRE(spectrum_shuffle(spectrum_reverse(t.constant(x), g), g).value() == x);
    }
}

TEST_CASE("groupings that do not divide the channels are rejected") {
  CHECK_THROWS_AS(SpectrumGrouping::make(6, 4), ConfigError);
  CHECK_THROWS_AS(SpectrumGrouping::make(6, 0), ConfigError);
  CHECK_THROWS_AS(shuffle_permutation(10, 3), ConfigError);
  CHECK(SpectrumGrouping::make(28, 4).width == 7);
}

TEST_CASE("grouped attention matches an explicit loop") {
  Rng rng(32);
  const std::size_t n = 7, cg = 3;
  Tape t;
  const Tensor x = randn(rng, {n, cg});
  const ProjectionWeights w = weights(t, rng, cg);
  const auto tr = grouped_spectral_attention_traced(t.constant(x), w);

  auto proj = [&](const Tensor& m) { return matmul(x, m); };
  const Tensor q = proj(w.wq.value()), k = proj(w.wk.value()), v = proj(w.wv.value());
  Tensor a({cg, cg});
  for (std::size_t i = 0; i < cg; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < cg; ++j) {
      double s = 0;
      for (std::size_t p = 0; p < n; ++p) s += q.at(p, i) * k.at(p, j);
      a.at(i, j) = s / std::sqrt(3.0);
      mx = std::max(mx, a.at(i, j));
    }
    double z = 0;
    for (std::size_t j = 0; j < cg; ++j) z += (a.at(i, j) = std::exp(a.at(i, j) - mx));
    for (std::size_t j = 0; j < cg; ++j) a.at(i, j) /= z;
  }
  CHECK(max_abs_diff(tr.attention.value(), a) < 1e-14);
  Tensor out({n, cg});
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t i = 0; i < cg; ++i)
      for (std::size_t j = 0; j < cg; ++j) out.at(p, i) += a.at(i, j) * v.at(p, j);
  CHECK(max_abs_diff(tr.output.value(), out) < 1e-13);
}

TEST_CASE("attention matrix is Cg x Cg and row-stochastic") {
  Rng rng(33);
  Tape t;
  const auto tr = grouped_spectral_attention_traced(t.constant(randn(rng, {16, 4})),
                                                    weights(t, rng, 4));
  REQUIRE(tr.attention.shape() == Shape{4, 4});
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(tr.attention.value().at(i, j) > 0.0);
      s += tr.attention.value().at(i, j);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("local attention only mixes channels within a group") {
  Rng rng(34);
  for (std::size_t c : {4u, 8u, 12u})
    for (std::size_t g : {2u, 4u}) {
      const std::size_t cg = c / g;
      const Tensor wq = randn(rng, {cg, cg}), wk = randn(rng, {cg, cg}), wv = randn(rng, {cg, cg});
      const auto f = [&](Tape& t, Var x) {
        return local_spectral_attention(x, g, {t.constant(wq), t.constant(wk), t.constant(wv)});
      };
      CHECK(traced_dependencies(f, randn(rng, {3, 3, c})) == local_oracle(c, g));
    }
}

TEST_CASE("ss_msa dependencies match symbolic reachability") {
  Rng rng(35);
  for (std::size_t c : {4u, 8u, 12u})
    for (std::size_t g : {2u, 4u}) {
      const std::size_t cg = c / g;
      std::vector<Tensor> w;
      for (int i = 0; i < 6; ++i) w.push_back(randn(rng, {cg, cg}));
      const auto f = [&](Tape& t, Var x) {
        auto k = [&](int i) { return t.constant(w[i]); };
        return ss_msa(x, g, {k(0), k(1), k(2)}, {k(3), k(4), k(5)});
      };
      INFO("C=" << c << " G=" << g);
      const DepSets got = traced_dependencies(f, randn(rng, {3, 3, c}));
      CHECK(got == ss_msa_oracle(c, g));
      if (cg >= g) CHECK(got[0].size() == c);
    }
}

TEST_CASE("zero value weights make sstb the identity") {
  Rng rng(36);
  Tape t;
  const std::size_t c = 8;
  const Tensor x = randn(rng, {2, 2, c});
  ProjectionWeights local = weights(t, rng, 2), nonlocal = weights(t, rng, 2);
  local.wv = t.constant(Tensor({2, 2}, 0.0));
  nonlocal.wv = t.constant(Tensor({2, 2}, 0.0));
  const SstbWeights w{t.constant(Tensor({c}, 1.0)), t.constant(Tensor({c}, 0.0)), local, nonlocal};
  CHECK(sstb(t.constant(x), 4, w).value() == x);
}

TEST_CASE("attention multiply-adds are 2 HW Cg C per phase") {
  Rng rng(37);
  MacCounter m;
  Tape t;
  t.set_counter(&m);
  local_spectral_attention(t.constant(randn(rng, {8, 8, 8})), 4, weights(t, rng, 2));
  CHECK(m[MacCategory::kAttention] == 2048);
  CHECK(m[MacCategory::kProjection] == 3ULL * 64 * 2 * 8);
}
