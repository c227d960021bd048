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

#ifndef LSST_OPS_HPP_
#define LSST_OPS_HPP_

#include <cstddef>
#include <vector>

#include "lsst/tape.hpp"
#include "lsst/tensor.hpp"

namespace lsst {

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;  // symmetric zero padding
  std::size_t groups = 1;

  // Zero padding that keeps the spatial size for odd kernels at stride 1.
  static Conv2dOptions same(std::size_t kernel, std::size_t groups = 1) {
    return {1, (kernel - 1) / 2, groups};
  }
};

// Raw kernels on [H, W, C] tensors. Weights are [kh, kw, Cin/groups, Cout].
namespace kernels {

std::size_t conv_out_dim(std::size_t in, std::size_t kernel, std::size_t stride,
                         std::size_t padding);

Tensor conv2d(const Tensor& x, const Tensor& w, const Conv2dOptions& opt);
// Adjoint of conv2d w.r.t. x: maps a [Ho, Wo, Cout] tensor back to `x_shape`.
Tensor conv2d_input_adjoint(const Tensor& gy, const Tensor& w, const Shape& x_shape,
                            const Conv2dOptions& opt);
// d<conv2d(x, w), gy>/dw.
Tensor conv2d_weight_grad(const Tensor& x, const Tensor& gy, const Shape& w_shape,
                          const Conv2dOptions& opt);
std::uint64_t conv2d_macs(const Shape& w_shape, std::size_t out_h, std::size_t out_w,
                          std::size_t groups);

}  // namespace kernels

namespace ops {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var sum(Var a);
Var mean(Var a);
Var reshape(Var a, Shape shape);
Var transpose(Var a);  // rank 2

Var matmul(Var a, Var b, MacCategory category = MacCategory::kMatmul);

// Row-wise softmax with per-row max subtraction. Rank 2.
Var softmax_rows(Var a);

// Channel (last-axis) manipulation.
Var slice_channels(Var x, std::size_t begin, std::size_t count);
Var concat_channels(const std::vector<Var>& parts);
// out[..., j] = x[..., src[j]]; `src` must be a permutation.
Var permute_channels(Var x, const std::vector<std::size_t>& src);

// Cross-correlation. `bias` may be a default-constructed Var (no bias).
Var conv2d(Var x, Var w, Var bias, const Conv2dOptions& opt);
// Exact adjoint of conv2d(., w) with the same stride/padding; groups = 1.
// Output spatial size is (in - 1) * stride + k - 2 * padding.
Var transposed_conv2d(Var y, Var w, Var bias, std::size_t stride = 2,
                      std::size_t padding = 0);

// Exact erf form: 0.5 x (1 + erf(x / sqrt 2)).
Var gelu(Var x);

// Normalizes over the last axis at every position, then gamma * xhat + beta.
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

}  // namespace ops

double gelu_scalar(double x);

}  // namespace lsst

#endif  // LSST_OPS_HPP_
