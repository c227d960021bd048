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

#ifndef LSST_LOSS_HPP_
#define LSST_LOSS_HPP_

#include <string>
#include <vector>

#include "lsst/tape.hpp"
#include "lsst/tensor.hpp"

namespace lsst::loss {

struct BandLossReport {
  std::vector<double> rmse;     // per-band RMSE
  std::vector<double> weights;  // focal weights
  double alpha = 0.0;
  double total = 0.0;           // mean(weights * rmse)

  // "band,rmse,weight" rows.
  std::string to_csv() const;
};

// Per-band RMSE of two [H, W, bands] cubes.
std::vector<double> band_rmse(const Tensor& truth, const Tensor& prediction);

// log(rmse^alpha + 1), natural log.
double focal_weight(double rmse, double alpha);

BandLossReport focal_spectrum_report(const Tensor& truth, const Tensor& prediction,
                                     double alpha);

// Differentiable focal spectrum loss. The focal weights are computed from the
// current per-band errors and then held fixed: no gradient flows through them.
Var focal_spectrum_loss(Var prediction, const Tensor& truth, double alpha,
                        BandLossReport* report = nullptr);

// RMSE over every entry of the cube.
double rmse(const Tensor& truth, const Tensor& prediction);
Var rmse_loss(Var prediction, const Tensor& truth);

}  // namespace lsst::loss

#endif  // LSST_LOSS_HPP_
