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

#ifndef LSST_PARAMS_HPP_
#define LSST_PARAMS_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lsst/tape.hpp"
#include "lsst/tensor.hpp"

namespace lsst {

// Named learnable tensors in insertion order. Names are hierarchical paths
// ("enc0.block0.lscb.dw.weight") and unique.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
  };

  void add(std::string name, Tensor value);
  bool contains(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t total_parameters() const;

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::vector<Entry>& entries() noexcept { return entries_; }

  friend bool operator==(const ParameterStore& a, const ParameterStore& b) {
    return a.entries_.size() == b.entries_.size() && [&] {
      for (std::size_t i = 0; i < a.entries_.size(); ++i) {
        if (a.entries_[i].name != b.entries_[i].name ||
            !(a.entries_[i].value == b.entries_[i].value))
          return false;
      }
      return true;
    }();
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Puts every parameter of a store on a tape. Trainable bindings create named
// variables; frozen bindings create constants (inference).
class ParameterBinding {
 public:
  ParameterBinding(Tape& tape, const ParameterStore& store, bool trainable = true);
  // Binds existing tape nodes under the given names.
  ParameterBinding(Tape& tape, const std::vector<std::string>& names, const std::vector<Var>& vars);

  Var operator[](std::string_view name) const;
  Var get(const std::string& prefix, std::string_view leaf) const;
  bool contains(std::string_view name) const;
  Tape& tape() const noexcept { return *tape_; }

 private:
  Tape* tape_;
  std::unordered_map<std::string, Var> vars_;
};

}  // namespace lsst

#endif  // LSST_PARAMS_HPP_
