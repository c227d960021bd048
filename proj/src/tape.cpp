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

#include "lsst/tape.hpp"

#include "lsst/errors.hpp"

namespace lsst {

std::uint64_t MacCounter::total() const {
  std::uint64_t t = 0;
  for (auto m : macs) t += m;
  return t;
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.is_leaf = true;
  return push(std::move(n));
}

Var Tape::variable(Tensor value, std::string name) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  n.is_leaf = true;
  n.name = std::move(name);
  return push(std::move(n));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(fn));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (!in.valid()) continue;
    if (in.tape() != this) throw UsageError("op input recorded on a different tape");
    n.needs_grad = n.needs_grad || nodes_[in.id()].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Tensor& g = grads_[id];
  if (g.empty()) g = Tensor(nodes_[id].value.shape(), 0.0);
  return g;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw UsageError("backward: loss belongs to another tape");
  if (loss.size() != 1) {
    throw UsageError("backward: loss must be a scalar, got shape " +
                     shape_str(loss.shape()));
  }
  grads_.assign(nodes_.size(), Tensor());
  if (!nodes_[loss.id()].needs_grad) return;
  grads_[loss.id()] = Tensor(loss.shape(), 1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || grads_[i].empty()) continue;
    n.backward(*this, i);
  }
}

Tensor Tape::grad(Var v) const {
  if (v.id() < grads_.size() && !grads_[v.id()].empty()) return grads_[v.id()];
  return Tensor(v.shape(), 0.0);
}

std::vector<Tape::NamedGrad> Tape::parameter_gradients() const {
  std::vector<NamedGrad> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!n.is_leaf || !n.needs_grad || n.name.empty()) continue;
    Tensor g = (i < grads_.size() && !grads_[i].empty()) ? grads_[i]
                                                         : Tensor(n.value.shape(), 0.0);
    out.push_back({n.name, std::move(g)});
  }
  return out;
}

}  // namespace lsst
