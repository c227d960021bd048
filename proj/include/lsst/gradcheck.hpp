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

#ifndef LSST_GRADCHECK_HPP_
#define LSST_GRADCHECK_HPP_

#include <cstddef>
#include <functional>
#include <vector>

#include "lsst/tape.hpp"
#include "lsst/tensor.hpp"

namespace lsst {

struct GradCheckResult {
  // max over checked coordinates of |g_tape - g_fd| / max(1, |g_fd|)
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
};

using ScalarFn = std::function<Var(Tape&, Var)>;
using MultiScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h against tape
// gradients. `max_coords_per_input` = 0 checks every coordinate; otherwise an
// evenly spaced subset of that many coordinates per input.
GradCheckResult grad_check(const MultiScalarFn& f, const std::vector<Tensor>& inputs,
                           double h = 1e-5, std::size_t max_coords_per_input = 0);

double grad_check(const ScalarFn& f, const Tensor& x, double h = 1e-5);

}  // namespace lsst

#endif  // LSST_GRADCHECK_HPP_
