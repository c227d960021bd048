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

#include "lsst/train.hpp"

#include <thread>
#include <utility>

#include "lsst/blocks.hpp"
#include "lsst/errors.hpp"

namespace lsst::train {

Tensor flip_view(const Tensor& cube, unsigned code) {
  cassi::validate_cube(cube);
  const std::size_t h = cube.dim(0), w = cube.dim(1), n = cube.dim(2);
  Tensor out(cube.shape());
  for (std::size_t i = 0; i < h; ++i) {
    const std::size_t si = (code & 1u) ? h - 1 - i : i;
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t sj = (code & 2u) ? w - 1 - j : j;
      for (std::size_t k = 0; k < n; ++k) out.at(i, j, k) = cube.at(si, sj, k);
    }
  }
  return out;
}

Trainer::Trainer(ModelConfig cfg, TrainOptions opt, Dataset data, ParameterStore params)
    : Trainer(cfg, opt, std::move(data), std::move(params), OptimizerState{}) {
  state_ = OptimizerState::for_store(params_, AdamConfig{.lr = opt_.lr, .single_precision = true});
}

Trainer::Trainer(ModelConfig cfg, TrainOptions opt, Dataset data, ParameterStore params,
                 OptimizerState state)
    : cfg_(cfg),
      opt_(opt),
      data_(std::move(data)),
      op_(data_.mask, cfg.step),
      params_(std::move(params)),
      state_(std::move(state)) {
  cfg_.validate();
  cassi::validate_cube(data_.scene);
  if (data_.scene.dim(2) != cfg_.bands) {
    throw DimensionError("training scene has " + std::to_string(data_.scene.dim(2)) +
                         " bands, config expects " + std::to_string(cfg_.bands));
  }
  if (data_.scene.dim(0) != data_.mask.dim(0) || data_.scene.dim(1) != data_.mask.dim(1)) {
    throw DimensionError("scene " + shape_str(data_.scene.shape()) + " does not match mask " +
                         shape_str(data_.mask.shape()));
  }
  if (opt_.batch == 0) throw ConfigError("batch size must be positive");
  if (opt_.threads == 0) throw ConfigError("thread count must be positive");
  if (opt_.loss == LossKind::kFocal && !(opt_.alpha > 0.0)) {
    throw ConfigError("focal loss needs alpha > 0");
  }
  for (std::size_t s = 0; s < std::min<std::size_t>(opt_.batch, 4); ++s) {
    views_.push_back(flip_view(data_.scene, static_cast<unsigned>(s)));
    measurements_.push_back(cassi::forward_sense(views_.back(), op_));
  }
}

Trainer::SampleResult Trainer::run_sample(std::size_t s, bool with_grad) const {
  const std::size_t v = s % views_.size();
  Tape tape;
  ParameterBinding binding(tape, params_, with_grad);
  Var pred = blocks::lsst_forward(binding, cfg_, measurements_[v], op_);
  SampleResult r;
  Var loss;
  if (opt_.loss == LossKind::kFocal) {
    loss = loss::focal_spectrum_loss(pred, views_[v], opt_.alpha, &r.report);
  } else {
    loss = loss::rmse_loss(pred, views_[v]);
    r.report.rmse = loss::band_rmse(views_[v], pred.value());
    r.report.weights.assign(cfg_.bands, 0.0);
    r.report.total = loss.value()[0];
  }
  r.loss = loss.value()[0];
  if (with_grad) {
    tape.backward(loss);
    r.grads = tape.parameter_gradients();
  }
  return r;
}

StepRecord Trainer::run_batch(bool with_grad, std::vector<Tape::NamedGrad>* grads) const {
  const std::size_t b = opt_.batch;
  std::vector<SampleResult> results(b);
  const std::size_t workers = std::min(opt_.threads, b);
  if (workers <= 1) {
    for (std::size_t s = 0; s < b; ++s) results[s] = run_sample(s, with_grad);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t s = t; s < b; s += workers) results[s] = run_sample(s, with_grad);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  StepRecord rec;
  rec.step = state_.step;
  rec.rmse.assign(cfg_.bands, 0.0);
  rec.weights.assign(cfg_.bands, 0.0);
  const double inv = 1.0 / static_cast<double>(b);
  for (const auto& r : results) {
    rec.total += r.loss * inv;
    for (std::size_t k = 0; k < cfg_.bands; ++k) {
      rec.rmse[k] += r.report.rmse[k] * inv;
      rec.weights[k] += r.report.weights[k] * inv;
    }
  }
  if (grads) {
    *grads = std::move(results[0].grads);
    for (std::size_t s = 1; s < b; ++s) {
      for (std::size_t p = 0; p < grads->size(); ++p) (*grads)[p].grad += results[s].grads[p].grad;
    }
    for (auto& g : *grads) g.grad *= inv;
  }
  return rec;
}

StepRecord Trainer::step() {
  std::vector<Tape::NamedGrad> grads;
  StepRecord rec = run_batch(true, &grads);
  adam_step(state_, params_, grads);
  rec.step = state_.step;
  return rec;
}

StepRecord Trainer::evaluate() const { return run_batch(false, nullptr); }

}  // namespace lsst::train
