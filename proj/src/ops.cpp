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

#include "lsst/ops.hpp"

#include <cmath>
#include <numbers>

#include "lsst/errors.hpp"

namespace lsst {

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

namespace kernels {

std::size_t conv_out_dim(std::size_t in, std::size_t kernel, std::size_t stride,
                         std::size_t padding) {
  if (stride == 0) throw ConfigError("conv: stride must be positive");
  if (in + 2 * padding < kernel) {
    throw DimensionError("conv: kernel " + std::to_string(kernel) +
                         " larger than padded input " + std::to_string(in + 2 * padding));
  }
  return (in + 2 * padding - kernel) / stride + 1;
}

namespace {

struct ConvGeometry {
  std::size_t h, w, cin, kh, kw, cin_g, cout, cout_g, groups, oh, ow;
};

ConvGeometry geometry(const Shape& x, const Shape& w, const Conv2dOptions& opt) {
  if (x.size() != 3) throw DimensionError("conv: input must be [H,W,C], got " + shape_str(x));
  if (w.size() != 4) throw DimensionError("conv: weight must be [kh,kw,Cin/g,Cout], got " + shape_str(w));
  if (opt.groups == 0 || x[2] % opt.groups != 0) {
    throw ConfigError("conv: " + std::to_string(x[2]) + " input channels not divisible by " +
                      std::to_string(opt.groups) + " groups");
  }
  if (w[3] % opt.groups != 0) {
    throw ConfigError("conv: " + std::to_string(w[3]) + " output channels not divisible by " +
                      std::to_string(opt.groups) + " groups");
  }
  if (w[2] != x[2] / opt.groups) {
    throw DimensionError("conv: weight " + shape_str(w) + " does not match input " +
                         shape_str(x) + " with " + std::to_string(opt.groups) + " groups");
  }
  ConvGeometry g{};
  g.h = x[0];
  g.w = x[1];
  g.cin = x[2];
  g.kh = w[0];
  g.kw = w[1];
  g.cin_g = w[2];
  g.cout = w[3];
  g.groups = opt.groups;
  g.cout_g = g.cout / g.groups;
  g.oh = conv_out_dim(g.h, g.kh, opt.stride, opt.padding);
  g.ow = conv_out_dim(g.w, g.kw, opt.stride, opt.padding);
  return g;
}

// Calls fn(oy, ox, iy, ix, ky, kx) for every in-bounds tap.
template <typename Fn>
void for_each_tap(const ConvGeometry& g, const Conv2dOptions& opt, Fn&& fn) {
  const auto pad = static_cast<std::ptrdiff_t>(opt.padding);
  const auto stride = static_cast<std::ptrdiff_t>(opt.stride);
  for (std::size_t oy = 0; oy < g.oh; ++oy) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy) * stride - pad +
                                static_cast<std::ptrdiff_t>(ky);
      if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
      for (std::size_t ox = 0; ox < g.ow; ++ox) {
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox) * stride - pad +
                                    static_cast<std::ptrdiff_t>(kx);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
          fn(oy, ox, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), ky, kx);
        }
      }
    }
  }
}

}  // namespace

std::uint64_t conv2d_macs(const Shape& w_shape, std::size_t out_h, std::size_t out_w,
                          std::size_t groups) {
  (void)groups;  // w_shape already holds Cin/groups
  return static_cast<std::uint64_t>(w_shape[0]) * w_shape[1] * w_shape[2] * w_shape[3] *
         out_h * out_w;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Conv2dOptions& opt) {
  const ConvGeometry g = geometry(x.shape(), w.shape(), opt);
  Tensor out({g.oh, g.ow, g.cout});
  const double* xd = x.data().data();
  const double* wd = w.data().data();
  double* od = out.data().data();
  for_each_tap(g, opt, [&](std::size_t oy, std::size_t ox, std::size_t iy, std::size_t ix,
                           std::size_t ky, std::size_t kx) {
    const double* xrow = xd + (iy * g.w + ix) * g.cin;
    double* orow = od + (oy * g.ow + ox) * g.cout;
    const double* wtap = wd + (ky * g.kw + kx) * g.cin_g * g.cout;
    for (std::size_t grp = 0; grp < g.groups; ++grp) {
      for (std::size_t ci = 0; ci < g.cin_g; ++ci) {
        const double xv = xrow[grp * g.cin_g + ci];
        const double* wrow = wtap + ci * g.cout + grp * g.cout_g;
        double* o = orow + grp * g.cout_g;
        for (std::size_t co = 0; co < g.cout_g; ++co) o[co] += xv * wrow[co];
      }
    }
  });
  return out;
}

Tensor conv2d_input_adjoint(const Tensor& gy, const Tensor& w, const Shape& x_shape,
                            const Conv2dOptions& opt) {
  const ConvGeometry g = geometry(x_shape, w.shape(), opt);
  if (gy.shape() != Shape{g.oh, g.ow, g.cout}) {
    throw DimensionError("conv adjoint: expected " + shape_str({g.oh, g.ow, g.cout}) +
                         ", got " + shape_str(gy.shape()));
  }
  Tensor gx(x_shape);
  const double* gyd = gy.data().data();
  const double* wd = w.data().data();
  double* gxd = gx.data().data();
  for_each_tap(g, opt, [&](std::size_t oy, std::size_t ox, std::size_t iy, std::size_t ix,
                           std::size_t ky, std::size_t kx) {
    double* xrow = gxd + (iy * g.w + ix) * g.cin;
    const double* grow = gyd + (oy * g.ow + ox) * g.cout;
    const double* wtap = wd + (ky * g.kw + kx) * g.cin_g * g.cout;
    for (std::size_t grp = 0; grp < g.groups; ++grp) {
      for (std::size_t ci = 0; ci < g.cin_g; ++ci) {
        const double* wrow = wtap + ci * g.cout + grp * g.cout_g;
        const double* gr = grow + grp * g.cout_g;
        double acc = 0.0;
        for (std::size_t co = 0; co < g.cout_g; ++co) acc += gr[co] * wrow[co];
        xrow[grp * g.cin_g + ci] += acc;
      }
    }
  });
  return gx;
}

Tensor conv2d_weight_grad(const Tensor& x, const Tensor& gy, const Shape& w_shape,
                          const Conv2dOptions& opt) {
  const ConvGeometry g = geometry(x.shape(), w_shape, opt);
  if (gy.shape() != Shape{g.oh, g.ow, g.cout}) {
    throw DimensionError("conv weight grad: expected " + shape_str({g.oh, g.ow, g.cout}) +
                         ", got " + shape_str(gy.shape()));
  }
  Tensor gw(w_shape);
  const double* xd = x.data().data();
  const double* gyd = gy.data().data();
  double* gwd = gw.data().data();
  for_each_tap(g, opt, [&](std::size_t oy, std::size_t ox, std::size_t iy, std::size_t ix,
                           std::size_t ky, std::size_t kx) {
    const double* xrow = xd + (iy * g.w + ix) * g.cin;
    const double* grow = gyd + (oy * g.ow + ox) * g.cout;
    double* wtap = gwd + (ky * g.kw + kx) * g.cin_g * g.cout;
    for (std::size_t grp = 0; grp < g.groups; ++grp) {
      for (std::size_t ci = 0; ci < g.cin_g; ++ci) {
        const double xv = xrow[grp * g.cin_g + ci];
        double* wrow = wtap + ci * g.cout + grp * g.cout_g;
        const double* gr = grow + grp * g.cout_g;
        for (std::size_t co = 0; co < g.cout_g; ++co) wrow[co] += xv * gr[co];
      }
    }
  });
  return gw;
}

}  // namespace kernels

namespace ops {

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw UsageError("op applied to an empty Var");
  return *a.tape();
}

void require_same(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

void accumulate(Tape& t, Var v, const Tensor& g) {
  if (t.needs_grad(v)) t.grad_buffer(v.id()) += g;
}

}  // namespace

Var add(Var a, Var b) {
  require_same(a, b, "add");
  Tape& t = tape_of(a);
  return t.record(a.value() + b.value(), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Tensor& g = tp.output_grad(self);
    accumulate(tp, a, g);
    accumulate(tp, b, g);
  });
}

Var sub(Var a, Var b) {
  require_same(a, b, "sub");
  Tape& t = tape_of(a);
  return t.record(a.value() - b.value(), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Tensor& g = tp.output_grad(self);
    accumulate(tp, a, g);
    if (tp.needs_grad(b)) tp.grad_buffer(b.id()) -= g;
  });
}

Var mul(Var a, Var b) {
  require_same(a, b, "mul");
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Tensor& g = tp.output_grad(self);
    if (tp.needs_grad(a)) {
      Tensor& ga = tp.grad_buffer(a.id());
      const Tensor& bv = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.needs_grad(b)) {
      Tensor& gb = tp.grad_buffer(b.id());
      const Tensor& av = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  return t.record(a.value() * s, {a}, [a, s](Tape& tp, std::size_t self) {
    const Tensor& g = tp.output_grad(self);
    Tensor& ga = tp.grad_buffer(a.id());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return t.record(Tensor({1}, s), {a}, [a](Tape& tp, std::size_t self) {
    const double g = tp.output_grad(self)[0];
    Tensor& ga = tp.grad_buffer(a.id());
    for (auto& v : ga.data()) v += g;
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Var reshape(Var a, Shape shape) {
  Tape& t = tape_of(a);
  return t.record(a.value().reshaped(std::move(shape)), {a},
                  [a](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.output_grad(self);
                    Tensor& ga = tp.grad_buffer(a.id());
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                  });
}

namespace {

Tensor transpose2d(const Tensor& a) {
  const std::size_t m = a.dim(0), n = a.dim(1);
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  return out;
}

// a^T b without forming a^T.
Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = &a[p * m];
    const double* brow = &b[p * n];
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

// a b^T without forming b^T.
Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = &a[i * k];
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = &b[j * k];
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      out[i * n + j] = acc;
    }
  }
  return out;
}

}  // namespace

Var transpose(Var a) {
  if (a.shape().size() != 2) throw DimensionError("transpose: rank-2 input required");
  Tape& t = tape_of(a);
  return t.record(transpose2d(a.value()), {a}, [a](Tape& tp, std::size_t self) {
    tp.grad_buffer(a.id()) += transpose2d(tp.output_grad(self));
  });
}

Var matmul(Var a, Var b, MacCategory category) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() != 2 || bs.size() != 2 || as[1] != bs[0]) {
    throw DimensionError("matmul: " + shape_str(as) + " x " + shape_str(bs));
  }
  Tape& t = tape_of(a);
  t.count(category, static_cast<std::uint64_t>(as[0]) * as[1] * bs[1]);
  return t.record(lsst::matmul(a.value(), b.value()), {a, b},
                  [a, b](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.output_grad(self);
                    if (tp.needs_grad(a)) tp.grad_buffer(a.id()) += matmul_nt(g, b.value());
                    if (tp.needs_grad(b)) tp.grad_buffer(b.id()) += matmul_tn(a.value(), g);
                  });
}

Var softmax_rows(Var a) {
  if (a.shape().size() != 2) throw DimensionError("softmax_rows: rank-2 input required");
  Tape& t = tape_of(a);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor out({m, n});
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < m; ++i) {
    double mx = x[i * n];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[i * n + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(x[i * n + j] - mx);
      z += out[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  return t.record(std::move(out), {a}, [a, m, n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.output_grad(self);
    const Tensor& y = tp.value(self);
    Tensor& ga = tp.grad_buffer(a.id());
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += y[i * n + j] * (g[i * n + j] - s);
    }
  });
}

Var slice_channels(Var x, std::size_t begin, std::size_t count) {
  const Shape& s = x.shape();
  if (s.empty() || count == 0 || begin + count > s.back()) {
    throw DimensionError("slice_channels: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + shape_str(s));
  }
  Tape& t = tape_of(x);
  const std::size_t c = s.back();
  const std::size_t rows = x.size() / c;
  Shape os = s;
  os.back() = count;
  Tensor out(os);
  const Tensor& xv = x.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < count; ++j) out[r * count + j] = xv[r * c + begin + j];
  return t.record(std::move(out), {x},
                  [x, begin, count, c, rows](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.output_grad(self);
                    Tensor& gx = tp.grad_buffer(x.id());
                    for (std::size_t r = 0; r < rows; ++r)
                      for (std::size_t j = 0; j < count; ++j)
                        gx[r * c + begin + j] += g[r * count + j];
                  });
}

Var concat_channels(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_channels: no inputs");
  Tape& t = tape_of(parts[0]);
  Shape lead = parts[0].shape();
  lead.pop_back();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    Shape pl = p.shape();
    const std::size_t w = pl.back();
    pl.pop_back();
    if (pl != lead) {
      throw DimensionError("concat_channels: " + shape_str(parts[0].shape()) + " vs " +
                           shape_str(p.shape()));
    }
    widths.push_back(w);
    total += w;
  }
  Shape os = lead;
  os.push_back(total);
  Tensor out(os);
  const std::size_t rows = out.size() / total;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < widths[k]; ++j)
        out[r * total + offset + j] = pv[r * widths[k] + j];
    offset += widths[k];
  }
  return t.record(std::move(out), parts,
                  [parts, widths, total, rows](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.output_grad(self);
                    std::size_t off = 0;
                    for (std::size_t k = 0; k < parts.size(); ++k) {
                      if (tp.needs_grad(parts[k])) {
                        Tensor& gp = tp.grad_buffer(parts[k].id());
                        for (std::size_t r = 0; r < rows; ++r)
                          for (std::size_t j = 0; j < widths[k]; ++j)
                            gp[r * widths[k] + j] += g[r * total + off + j];
                      }
                      off += widths[k];
                    }
                  });
}

Var permute_channels(Var x, const std::vector<std::size_t>& src) {
  const Shape& s = x.shape();
  const std::size_t c = s.back();
  if (src.size() != c) {
    throw DimensionError("permute_channels: permutation of length " +
                         std::to_string(src.size()) + " for " + std::to_string(c) + " channels");
  }
  std::vector<bool> seen(c, false);
  for (auto i : src) {
    if (i >= c || seen[i]) throw DimensionError("permute_channels: not a permutation");
    seen[i] = true;
  }
  Tape& t = tape_of(x);
  const std::size_t rows = x.size() / c;
  Tensor out(s);
  const Tensor& xv = x.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = xv[r * c + src[j]];
  return t.record(std::move(out), {x}, [x, src, rows, c](Tape& tp, std::size_t self) {
    const Tensor& g = tp.output_grad(self);
    Tensor& gx = tp.grad_buffer(x.id());
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < c; ++j) gx[r * c + src[j]] += g[r * c + j];
  });
}

namespace {

void add_channel_bias(Tensor& out, const Tensor& bias) {
  const std::size_t c = out.shape().back();
  if (bias.size() != c) {
    throw DimensionError("bias of " + std::to_string(bias.size()) + " for " +
                         std::to_string(c) + " channels");
  }
  const std::size_t rows = out.size() / c;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] += bias[j];
}

void accumulate_bias_grad(Tape& tp, Var bias, const Tensor& g) {
  if (!bias.valid() || !tp.needs_grad(bias)) return;
  Tensor& gb = tp.grad_buffer(bias.id());
  const std::size_t c = g.shape().back();
  const std::size_t rows = g.size() / c;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < c; ++j) gb[j] += g[r * c + j];
}

}  // namespace

Var conv2d(Var x, Var w, Var bias, const Conv2dOptions& opt) {
  Tape& t = tape_of(x);
  Tensor out = kernels::conv2d(x.value(), w.value(), opt);
  if (bias.valid()) add_channel_bias(out, bias.value());
  t.count(MacCategory::kConv,
          kernels::conv2d_macs(w.shape(), out.dim(0), out.dim(1), opt.groups));
  std::vector<Var> inputs{x, w};
  if (bias.valid()) inputs.push_back(bias);
  return t.record(std::move(out), inputs, [x, w, bias, opt](Tape& tp, std::size_t self) {
    const Tensor& g = tp.output_grad(self);
    if (tp.needs_grad(x)) {
      tp.grad_buffer(x.id()) +=
          kernels::conv2d_input_adjoint(g, w.value(), x.shape(), opt);
    }
    if (tp.needs_grad(w)) {
      tp.grad_buffer(w.id()) += kernels::conv2d_weight_grad(x.value(), g, w.shape(), opt);
    }
    accumulate_bias_grad(tp, bias, g);
  });
}

Var transposed_conv2d(Var y, Var w, Var bias, std::size_t stride, std::size_t padding) {
  const Shape& ys = y.shape();
  const Shape& ws = w.shape();
  if (ys.size() != 3 || ws.size() != 4 || ws[3] != ys[2]) {
    throw DimensionError("transposed_conv2d: input " + shape_str(ys) + " vs weight " +
                         shape_str(ws));
  }
  if (stride == 0) throw ConfigError("transposed_conv2d: stride must be positive");
  if ((ys[0] - 1) * stride + ws[0] < 2 * padding + 1 ||
      (ys[1] - 1) * stride + ws[1] < 2 * padding + 1) {
    throw DimensionError("transposed_conv2d: padding too large");
  }
  const Conv2dOptions opt{stride, padding, 1};
  const Shape out_shape{(ys[0] - 1) * stride + ws[0] - 2 * padding,
                        (ys[1] - 1) * stride + ws[1] - 2 * padding, ws[2]};
  Tape& t = tape_of(y);
  Tensor out = kernels::conv2d_input_adjoint(y.value(), w.value(), out_shape, opt);
  if (bias.valid()) add_channel_bias(out, bias.value());
  t.count(MacCategory::kTransposedConv, kernels::conv2d_macs(ws, ys[0], ys[1], 1));
  std::vector<Var> inputs{y, w};
  if (bias.valid()) inputs.push_back(bias);
  return t.record(std::move(out), inputs, [y, w, bias, opt](Tape& tp, std::size_t self) {
    const Tensor& g = tp.output_grad(self);
    if (tp.needs_grad(y)) tp.grad_buffer(y.id()) += kernels::conv2d(g, w.value(), opt);
    if (tp.needs_grad(w)) {
      tp.grad_buffer(w.id()) += kernels::conv2d_weight_grad(g, y.value(), w.shape(), opt);
    }
    accumulate_bias_grad(tp, bias, g);
  });
}

Var gelu(Var x) {
  Tape& t = tape_of(x);
  Tensor out = x.value();
  for (auto& v : out.data()) v = gelu_scalar(v);
  return t.record(std::move(out), {x}, [x](Tape& tp, std::size_t self) {
    const Tensor& g = tp.output_grad(self);
    const Tensor& xv = x.value();
    Tensor& gx = tp.grad_buffer(x.id());
    constexpr double kInvSqrt2Pi = 0.3989422804014327;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = xv[i];
      const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      gx[i] += g[i] * (cdf + v * pdf);
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Shape& s = x.shape();
  const std::size_t c = s.back();
  if (c == 0) throw DimensionError("layer_norm: empty channel axis");
  if (gamma.size() != c || beta.size() != c) {
    throw DimensionError("layer_norm: affine size does not match " + std::to_string(c) +
                         " channels");
  }
  Tape& t = tape_of(x);
  const std::size_t rows = x.size() / c;
  Tensor xhat(s);
  std::vector<double> inv_std(rows);
  const Tensor& xv = x.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += xv[r * c + j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = xv[r * c + j] - mu;
      var += d * d;
    }
    var /= static_cast<double>(c);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) xhat[r * c + j] = (xv[r * c + j] - mu) * inv_std[r];
  }
  Tensor out(s);
  const Tensor& gm = gamma.value();
  const Tensor& bt = beta.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = gm[j] * xhat[r * c + j] + bt[j];
  return t.record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), rows,
       c](Tape& tp, std::size_t self) {
        const Tensor& g = tp.output_grad(self);
        if (tp.needs_grad(gamma)) {
          Tensor& gg = tp.grad_buffer(gamma.id());
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < c; ++j) gg[j] += g[r * c + j] * xhat[r * c + j];
        }
        if (tp.needs_grad(beta)) {
          Tensor& gb = tp.grad_buffer(beta.id());
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < c; ++j) gb[j] += g[r * c + j];
        }
        if (!tp.needs_grad(x)) return;
        Tensor& gx = tp.grad_buffer(x.id());
        const Tensor& gm = gamma.value();
        const double n = static_cast<double>(c);
        for (std::size_t r = 0; r < rows; ++r) {
          double s1 = 0.0, s2 = 0.0;
          for (std::size_t j = 0; j < c; ++j) {
            const double dxh = g[r * c + j] * gm[j];
            s1 += dxh;
            s2 += dxh * xhat[r * c + j];
          }
          for (std::size_t j = 0; j < c; ++j) {
            const double dxh = g[r * c + j] * gm[j];
            gx[r * c + j] += inv_std[r] / n * (n * dxh - s1 - xhat[r * c + j] * s2);
          }
        }
      });
}

}  // namespace ops
}  // namespace lsst
