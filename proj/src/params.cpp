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

#include "lsst/params.hpp"

#include "lsst/errors.hpp"

namespace lsst {

void ParameterStore::add(std::string name, Tensor value) {
  if (index_.contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(value)});
}

bool ParameterStore::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

const Tensor& ParameterStore::at(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ConfigError("unknown parameter '" + std::string(name) + "'");
  return entries_[it->second].value;
}

Tensor& ParameterStore::at(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const ParameterStore&>(*this).at(name));
}

std::size_t ParameterStore::total_parameters() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

ParameterBinding::ParameterBinding(Tape& tape, const ParameterStore& store, bool trainable)
    : tape_(&tape) {
  for (const auto& e : store.entries()) {
    vars_.emplace(e.name, trainable ? tape.variable(e.value, e.name) : tape.constant(e.value));
  }
}

ParameterBinding::ParameterBinding(Tape& tape, const std::vector<std::string>& names,
                                   const std::vector<Var>& vars)
    : tape_(&tape) {
  if (names.size() != vars.size()) {
    throw UsageError("ParameterBinding: " + std::to_string(names.size()) + " names for " +
                     std::to_string(vars.size()) + " variables");
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (vars[i].tape() != &tape) throw UsageError("ParameterBinding: variable from another tape");
    if (!vars_.emplace(names[i], vars[i]).second) {
      throw ConfigError("duplicate parameter name '" + names[i] + "'");
    }
  }
}

Var ParameterBinding::operator[](std::string_view name) const {
  auto it = vars_.find(std::string(name));
  if (it == vars_.end()) throw ConfigError("unbound parameter '" + std::string(name) + "'");
  return it->second;
}

Var ParameterBinding::get(const std::string& prefix, std::string_view leaf) const {
  return (*this)[prefix + "." + std::string(leaf)];
}

bool ParameterBinding::contains(std::string_view name) const {
  return vars_.contains(std::string(name));
}

}  // namespace lsst
