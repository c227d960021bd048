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

#include "lsst/loss.hpp"

#include <cmath>
#include <sstream>

#include "lsst/errors.hpp"

namespace lsst::loss {

namespace {

void check_pair(const Tensor& truth, const Tensor& prediction) {
  if (truth.rank() != 3 || !truth.same_shape(prediction)) {
    throw DimensionError("loss: cubes " + shape_str(truth.shape()) + " and " +
                         shape_str(prediction.shape()) + " must be equal-shaped [H,W,bands]");
  }
}

}  // namespace

std::string BandLossReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "band,rmse,weight\r\n";
  for (std::size_t k = 0; k < rmse.size(); ++k) os << k << ',' << rmse[k] << ',' << weights[k] << "\r\n";
  return os.str();
}

std::vector<double> band_rmse(const Tensor& truth, const Tensor& prediction) {
  check_pair(truth, prediction);
  const std::size_t bands = truth.dim(2);
  const std::size_t pixels = truth.size() / bands;
  std::vector<double> acc(bands, 0.0);
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t k = 0; k < bands; ++k) {
      const double d = prediction[p * bands + k] - truth[p * bands + k];
      acc[k] += d * d;
    }
  }
  for (auto& a : acc) a = std::sqrt(a / static_cast<double>(pixels));
  return acc;
}

double focal_weight(double rmse, double alpha) {
  if (!(rmse >= 0.0)) throw DomainError("focal_weight: per-band error must be nonnegative");
  if (!(alpha > 0.0)) throw DomainError("focal_weight: alpha must be positive");
  return std::log(std::pow(rmse, alpha) + 1.0);
}

BandLossReport focal_spectrum_report(const Tensor& truth, const Tensor& prediction,
                                     double alpha) {
  if (!(alpha > 0.0)) throw DomainError("focal spectrum loss: alpha must be positive");
  BandLossReport r;
  r.alpha = alpha;
  r.rmse = band_rmse(truth, prediction);
  double total = 0.0;
  for (double l : r.rmse) {
    r.weights.push_back(focal_weight(l, alpha));
    total += r.weights.back() * l;
  }
  r.total = total / static_cast<double>(r.rmse.size());
  return r;
}

Var focal_spectrum_loss(Var prediction, const Tensor& truth, double alpha,
                        BandLossReport* report) {
  BandLossReport r = focal_spectrum_report(truth, prediction.value(), alpha);
  Tape& tape = *prediction.tape();
  const double total = r.total;
  Var out = tape.record(
      Tensor({1}, total), {prediction},
      [prediction, truth, rmse = r.rmse, weights = r.weights](Tape& tp, std::size_t self) {
        // dL/dpred[p,k] = w_k / N * (pred - truth) / (HW * rmse_k)
        const double g = tp.output_grad(self)[0];
        const Tensor& pred = prediction.value();
        Tensor& gp = tp.grad_buffer(prediction.id());
        const std::size_t bands = rmse.size();
        const std::size_t pixels = pred.size() / bands;
        std::vector<double> coef(bands, 0.0);
        for (std::size_t k = 0; k < bands; ++k) {
          if (rmse[k] > 0.0) {
            coef[k] = g * weights[k] /
                      (static_cast<double>(bands) * static_cast<double>(pixels) * rmse[k]);
          }
        }
        for (std::size_t p = 0; p < pixels; ++p)
          for (std::size_t k = 0; k < bands; ++k)
            gp[p * bands + k] += coef[k] * (pred[p * bands + k] - truth[p * bands + k]);
      });
  if (report) *report = std::move(r);
  return out;
}

double rmse(const Tensor& truth, const Tensor& prediction) {
  check_pair(truth, prediction);
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = prediction[i] - truth[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(truth.size()));
}

Var rmse_loss(Var prediction, const Tensor& truth) {
  const double value = rmse(truth, prediction.value());
  Tape& tape = *prediction.tape();
  return tape.record(Tensor({1}, value), {prediction},
                     [prediction, truth, value](Tape& tp, std::size_t self) {
                       if (value == 0.0) return;
                       const double g = tp.output_grad(self)[0];
                       const Tensor& pred = prediction.value();
                       Tensor& gp = tp.grad_buffer(prediction.id());
                       const double c = g / (static_cast<double>(pred.size()) * value);
                       for (std::size_t i = 0; i < pred.size(); ++i)
                         gp[i] += c * (pred[i] - truth[i]);
                     });
}

}  // namespace lsst::loss
