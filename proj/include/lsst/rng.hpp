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

#ifndef LSST_RNG_HPP_
#define LSST_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace lsst {

// Seeded generator with explicit state. The engine is std::mt19937_64, whose
// output sequence is fixed by the standard; the real-valued conversions below
// are done by hand because std:: distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (cached second variate).
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  // Independent child stream keyed by `tag`; does not advance this stream.
  Rng fork(std::string_view tag) const;
  Rng fork(std::uint64_t index) const;

  std::uint64_t seed() const noexcept { return seed_; }

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lsst

#endif  // LSST_RNG_HPP_
