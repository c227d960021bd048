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

#ifndef LSST_TAPE_HPP_
#define LSST_TAPE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "lsst/tensor.hpp"

namespace lsst {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Categories for the multiply-add instrumentation.
enum class MacCategory : std::size_t {
  kMatmul = 0,       // generic matmul
  kProjection,       // Q/K/V projections
  kAttention,        // the two attention matmuls (scores and weighted sum)
  kConv,             // conv2d, all group configurations
  kTransposedConv,
  kCount_,
};

struct MacCounter {
  std::array<std::uint64_t, static_cast<std::size_t>(MacCategory::kCount_)> macs{};

  std::uint64_t operator[](MacCategory c) const {
    return macs[static_cast<std::size_t>(c)];
  }
  void add(MacCategory c, std::uint64_t n) { macs[static_cast<std::size_t>(c)] += n; }
  std::uint64_t total() const;
};

// Reverse-mode differentiation tape. Nodes are appended in evaluation order,
// which is a topological order by construction; backward() walks it once in
// reverse. Single writer: one forward/backward pass owns the tape.
class Tape {
 public:
  // Backward closure for node `self`: reads grad(self) and accumulates into
  // the gradient buffers of its inputs.
  using BackwardFn = std::function<void(Tape& tape, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Differentiable leaf. Named leaves are reported by parameter_gradients().
  Var variable(Tensor value, std::string name = {});

  // Used by op implementations. `fn` is dropped when no input needs grad.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }

  // Gradient flowing into node `id` during backward (zero-filled on first use).
  Tensor& grad_buffer(std::size_t id);
  const Tensor& output_grad(std::size_t self) const { return grads_[self]; }

  // Runs reverse accumulation from a scalar `loss`. Previous gradients are
  // discarded, so repeated calls on an unchanged tape are identical.
  void backward(Var loss);

  // Gradient w.r.t. `v` from the last backward(); zeros if none flowed.
  Tensor grad(Var v) const;

  struct NamedGrad {
    std::string name;
    Tensor grad;
  };
  std::vector<NamedGrad> parameter_gradients() const;

  std::size_t size() const noexcept { return nodes_.size(); }

  void set_counter(MacCounter* counter) noexcept { counter_ = counter; }
  void count(MacCategory category, std::uint64_t macs) {
    if (counter_) counter_->add(category, macs);
  }

 private:
  struct Node {
    Tensor value;
    BackwardFn backward;
    bool needs_grad = false;
    bool is_leaf = false;
    std::string name;
  };

  Var push(Node node);

  std::deque<Node> nodes_;
  std::vector<Tensor> grads_;
  MacCounter* counter_ = nullptr;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace lsst

#endif  // LSST_TAPE_HPP_
