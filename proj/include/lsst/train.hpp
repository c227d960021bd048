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

#ifndef LSST_TRAIN_HPP_
#define LSST_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lsst/cassi.hpp"
#include "lsst/config.hpp"
#include "lsst/loss.hpp"
#include "lsst/optim.hpp"
#include "lsst/params.hpp"
#include "lsst/tensor.hpp"

namespace lsst::train {

enum class LossKind { kFocal, kRmse };

struct TrainOptions {
  LossKind loss = LossKind::kFocal;
  double alpha = 0.5;
  double lr = 4e-4;
  std::size_t batch = 1;
  std::size_t threads = 1;
};

// One scene and the mask it is imaged through, with the dispersion step taken
// from the model config. Batch sample s views the scene under flip code s % 4
// (bit 0 flips rows, bit 1 flips columns); the measurement is re-simulated
// for every view.
struct Dataset {
  Tensor scene;
  Tensor mask;
};

Tensor flip_view(const Tensor& cube, unsigned code);

struct StepRecord {
  std::uint64_t step = 0;       // 1-based index of the update just applied
  double total = 0.0;           // batch-mean loss before the update
  std::vector<double> rmse;     // batch-mean per-band RMSE
  std::vector<double> weights;  // batch-mean focal weights (zeros for rmse loss)
};

class Trainer {
 public:
  Trainer(ModelConfig cfg, TrainOptions opt, Dataset data, ParameterStore params);
  Trainer(ModelConfig cfg, TrainOptions opt, Dataset data, ParameterStore params,
          OptimizerState state);

  StepRecord step();
  // Loss and per-band report at the current parameters, no update.
  StepRecord evaluate() const;

  const ParameterStore& params() const noexcept { return params_; }
  const OptimizerState& optimizer() const noexcept { return state_; }
  const ModelConfig& config() const noexcept { return cfg_; }

 private:
  struct SampleResult {
    double loss = 0.0;
    loss::BandLossReport report;
    std::vector<Tape::NamedGrad> grads;
  };
  SampleResult run_sample(std::size_t s, bool with_grad) const;
  StepRecord run_batch(bool with_grad, std::vector<Tape::NamedGrad>* grads) const;

  ModelConfig cfg_;
  TrainOptions opt_;
  Dataset data_;
  std::vector<Tensor> views_;
  std::vector<Tensor> measurements_;
  cassi::SensingOperator op_;
  ParameterStore params_;
  OptimizerState state_;
};

}  // namespace lsst::train

#endif  // LSST_TRAIN_HPP_
