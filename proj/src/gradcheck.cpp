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

#include "lsst/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lsst/errors.hpp"

namespace lsst {

namespace {

double evaluate(const MultiScalarFn& f, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  Var loss = f(tape, vars);
  if (loss.size() != 1) throw UsageError("grad_check: function must be scalar-valued");
  return loss.value()[0];
}

}  // namespace

GradCheckResult grad_check(const MultiScalarFn& f, const std::vector<Tensor>& inputs,
                           double h, std::size_t max_coords_per_input) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.push_back(tape.variable(t));
  Var loss = f(tape, vars);
  tape.backward(loss);

  GradCheckResult result;
  std::vector<Tensor> work = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor analytic = tape.grad(vars[k]);
    const std::size_t n = inputs[k].size();
    const std::size_t m = (max_coords_per_input == 0) ? n : std::min(n, max_coords_per_input);
    for (std::size_t s = 0; s < m; ++s) {
      const std::size_t i = (m == n) ? s : (s * n) / m;
      const double orig = work[k][i];
      work[k][i] = orig + h;
      const double fp = evaluate(f, work);
      work[k][i] = orig - h;
      const double fm = evaluate(f, work);
      work[k][i] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      const double err = std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd));
      ++result.coords_checked;
      if (err > result.max_rel_error || !std::isfinite(err)) {
        result.max_rel_error = std::isfinite(err) ? err : INFINITY;
        result.worst_input = k;
        result.worst_index = i;
      }
    }
  }
  return result;
}

double grad_check(const ScalarFn& f, const Tensor& x, double h) {
  const MultiScalarFn g = [&f](Tape& t, const std::vector<Var>& v) { return f(t, v[0]); };
  return grad_check(g, std::vector<Tensor>{x}, h).max_rel_error;
}

}  // namespace lsst
