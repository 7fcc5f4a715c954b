// Copyright 2026 The cdhwr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Differentiable layer operations recorded on a Tape.
//
// Image tensors are NHWC: [batch, height, width, channels]. Rank-3 inputs
// are treated as a batch of one and keep their rank on output. All
// reductions run in a fixed sequential order so repeated runs are
// bit-identical.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cdhwr/parallel.hpp"
#include "cdhwr/tape.hpp"
#include "cdhwr/tensor.hpp"

namespace cdhwr {

namespace detail {

template <class T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapRM = Eigen::Map<MatRM<T>>;
template <class T>
using CMapRM = Eigen::Map<const MatRM<T>>;

struct Nhwc {
  std::size_t n, h, w, c;
  std::size_t image() const { return h * w * c; }
};

inline Nhwc as_nhwc(const Shape& s, const char* op) {
  if (s.size() == 4) return {s[0], s[1], s[2], s[3]};
  if (s.size() == 3) return {1, s[0], s[1], s[2]};
  throw ShapeError(std::string(op) + ": expected [H,W,C] or [N,H,W,C], got " +
                   shape_str(s));
}

inline Shape nhwc_like(const Shape& in, std::size_t h, std::size_t w,
                       std::size_t c) {
  if (in.size() == 4) return {in[0], h, w, c};
  return {h, w, c};
}

// Rows of the im2col matrix are output pixels; columns run over
// (dy, dx, cin), matching a [k, k, Cin, Cout] kernel viewed as [k*k*Cin, Cout].
template <class T>
void im2col(const T* img, const Nhwc& g, std::size_t k, T* cols) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t row_len = k * k * g.c;
  for (std::size_t y = 0; y < g.h; ++y) {
    for (std::size_t x = 0; x < g.w; ++x) {
      T* row = cols + (y * g.w + x) * row_len;
      for (std::size_t dy = 0; dy < k; ++dy) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + dy) - pad;
        for (std::size_t dx = 0; dx < k; ++dx) {
          const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + dx) - pad;
          T* dst = row + (dy * k + dx) * g.c;
          if (sy < 0 || sx < 0 || sy >= static_cast<std::ptrdiff_t>(g.h) ||
              sx >= static_cast<std::ptrdiff_t>(g.w)) {
            std::fill(dst, dst + g.c, T{0});
          } else {
            const T* src = img + (static_cast<std::size_t>(sy) * g.w +
                                  static_cast<std::size_t>(sx)) * g.c;
            std::copy(src, src + g.c, dst);
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const T* cols, const Nhwc& g, std::size_t k, T* img) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t row_len = k * k * g.c;
  for (std::size_t y = 0; y < g.h; ++y) {
    for (std::size_t x = 0; x < g.w; ++x) {
      const T* row = cols + (y * g.w + x) * row_len;
      for (std::size_t dy = 0; dy < k; ++dy) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + dy) - pad;
        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(g.h)) continue;
        for (std::size_t dx = 0; dx < k; ++dx) {
          const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + dx) - pad;
          if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(g.w)) continue;
          const T* src = row + (dy * k + dx) * g.c;
          T* dst = img + (static_cast<std::size_t>(sy) * g.w +
                          static_cast<std::size_t>(sx)) * g.c;
          for (std::size_t c = 0; c < g.c; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

template <class T>
T stable_sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

}  // namespace detail

/// Same-padded stride-1 convolution: input [N,H,W,Cin] (or [H,W,Cin]),
/// kernel [k,k,Cin,Cout] with k odd.
template <class T>
Var conv2d(Tape<T>& tape, Var input, Var kernel) {
  using namespace detail;
  const Nhwc g = as_nhwc(tape.shape(input), "conv2d");
  const Shape& ks = tape.shape(kernel);
  if (ks.size() != 4 || ks[0] != ks[1] || ks[0] % 2 == 0) {
    throw ShapeError("conv2d: kernel must be [k,k,Cin,Cout] with odd k, got " +
                     shape_str(ks));
  }
  if (ks[2] != g.c) {
    throw ShapeError("conv2d: input has " + std::to_string(g.c) +
                     " channels but kernel expects " + std::to_string(ks[2]) +
                     " (input " + shape_str(tape.shape(input)) + ", kernel " +
                     shape_str(ks) + ")");
  }
  const std::size_t k = ks[0];
  const std::size_t cout = ks[3];
  const std::size_t pixels = g.h * g.w;
  const std::size_t depth = k * k * g.c;

  Tensor<T> out(nhwc_like(tape.shape(input), g.h, g.w, cout));
  {
    const T* x = tape.value(input).ptr();
    CMapRM<T> kmat(tape.value(kernel).ptr(), depth, cout);
    T* y = out.ptr();
    parallel_for(g.n, [&](std::size_t b) {
      std::vector<T> cols(pixels * depth);
      im2col(x + b * g.image(), g, k, cols.data());
      MapRM<T> ymat(y + b * pixels * cout, pixels, cout);
      ymat.noalias() = CMapRM<T>(cols.data(), pixels, depth) * kmat;
    });
  }

  return tape.record(
      std::move(out), {input, kernel},
      [input, kernel, g, k, cout, pixels, depth](Tape<T>& t, Var self) {
        const T* dy = t.grad_mut(self).ptr();
        const T* x = t.value(input).ptr();
        CMapRM<T> kmat(t.value(kernel).ptr(), depth, cout);
        if (t.requires_grad(input)) {
          T* dx = t.grad_mut(input).ptr();
          parallel_for(g.n, [&](std::size_t b) {
            MatRM<T> dcols = CMapRM<T>(dy + b * pixels * cout, pixels, cout) *
                             kmat.transpose();
            col2im_add(dcols.data(), g, k, dx + b * g.image());
          });
        }
        if (t.requires_grad(kernel)) {
          MapRM<T> dk(t.grad_mut(kernel).ptr(), depth, cout);
          // Per-sample partial products, summed in sample order.
          const std::size_t wave = std::max<std::size_t>(1, worker_threads());
          std::vector<MatRM<T>> partial(std::min(wave, g.n));
          for (std::size_t start = 0; start < g.n; start += wave) {
            const std::size_t count = std::min(wave, g.n - start);
            parallel_for(count, [&](std::size_t j) {
              const std::size_t b = start + j;
              std::vector<T> cols(pixels * depth);
              im2col(x + b * g.image(), g, k, cols.data());
              partial[j].noalias() =
                  CMapRM<T>(cols.data(), pixels, depth).transpose() *
                  CMapRM<T>(dy + b * pixels * cout, pixels, cout);
            });
            for (std::size_t j = 0; j < count; ++j) dk += partial[j];
          }
        }
      },
      "conv2d");
}

/// Non-overlapping max pooling with stride equal to the window. Gradient
/// flows to the first maximum in row-major window order.
template <class T>
Var maxpool2d(Tape<T>& tape, Var input, std::size_t ph, std::size_t pw) {
  using namespace detail;
  const Nhwc g = as_nhwc(tape.shape(input), "maxpool2d");
  if (ph == 0 || pw == 0 || g.h % ph != 0 || g.w % pw != 0) {
    throw ShapeError("maxpool2d: window " + std::to_string(ph) + "x" +
                     std::to_string(pw) + " does not divide input " +
                     shape_str(tape.shape(input)));
  }
  const std::size_t oh = g.h / ph, ow = g.w / pw;
  Tensor<T> out(nhwc_like(tape.shape(input), oh, ow, g.c));
  auto argmax = std::make_shared<std::vector<std::uint32_t>>(out.size());
  const T* x = tape.value(input).ptr();
  T* y = out.ptr();
  for (std::size_t b = 0; b < g.n; ++b) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        for (std::size_t c = 0; c < g.c; ++c) {
          std::size_t best = ((b * g.h + oy * ph) * g.w + ox * pw) * g.c + c;
          for (std::size_t dy = 0; dy < ph; ++dy) {
            for (std::size_t dx = 0; dx < pw; ++dx) {
              const std::size_t idx =
                  ((b * g.h + oy * ph + dy) * g.w + ox * pw + dx) * g.c + c;
              if (x[idx] > x[best]) best = idx;
            }
          }
          const std::size_t o = ((b * oh + oy) * ow + ox) * g.c + c;
          y[o] = x[best];
          (*argmax)[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return tape.record(
      std::move(out), {input},
      [input, argmax](Tape<T>& t, Var self) {
        const Tensor<T>& dy = t.grad_mut(self);
        Tensor<T>& dx = t.grad_mut(input);
        for (std::size_t o = 0; o < dy.size(); ++o) dx[(*argmax)[o]] += dy[o];
      },
      "maxpool2d");
}

enum class Mode { kTrain, kEval };

/// Running statistics of a batch-norm layer; empty until first populated.
template <class T>
struct BatchNormStats {
  Tensor<T> mean;
  Tensor<T> var;
  bool ready() const { return !mean.empty() && !var.empty(); }
  void reset(std::size_t channels) {
    mean = Tensor<T>(Shape{channels}, T{0});
    var = Tensor<T>(Shape{channels}, T{1});
  }
};

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

/// Batch normalization over every axis but the last. Train mode normalizes
/// with population statistics of the batch and folds them into `stats`;
/// eval mode normalizes with `stats`.
template <class T>
Var batchnorm(Tape<T>& tape, Var input, Var gamma, Var beta,
              BatchNormStats<T>* stats, Mode mode) {
  const Shape& s = tape.shape(input);
  const std::size_t c = s.back();
  if (tape.shape(gamma) != Shape{c} || tape.shape(beta) != Shape{c}) {
    throw ShapeError("batchnorm: gamma/beta must be [" + std::to_string(c) +
                     "], got " + shape_str(tape.shape(gamma)) + " and " +
                     shape_str(tape.shape(beta)));
  }
  const std::size_t n = tape.value(input).size() / c;
  const T* x = tape.value(input).ptr();
  const T* ga = tape.value(gamma).ptr();
  const T* be = tape.value(beta).ptr();

  auto xhat = std::make_shared<std::vector<T>>(n * c);
  auto inv_std = std::make_shared<std::vector<T>>(c);
  Tensor<T> out(s);

  if (mode == Mode::kTrain) {
    std::vector<double> mean(c, 0.0), var(c, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t ch = 0; ch < c; ++ch) mean[ch] += x[i * c + ch];
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double d = x[i * c + ch] - mean[ch];
        var[ch] += d * d;
      }
    }
    for (auto& v : var) v /= static_cast<double>(n);
    for (std::size_t ch = 0; ch < c; ++ch) {
      (*inv_std)[ch] = static_cast<T>(1.0 / std::sqrt(var[ch] + kBatchNormEpsilon));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const T xh = static_cast<T>((x[i * c + ch] - mean[ch])) * (*inv_std)[ch];
        (*xhat)[i * c + ch] = xh;
        out[i * c + ch] = ga[ch] * xh + be[ch];
      }
    }
    if (stats) {
      if (!stats->ready()) stats->reset(c);
      const double m = kBatchNormMomentum;
      for (std::size_t ch = 0; ch < c; ++ch) {
        stats->mean[ch] = static_cast<T>(m * stats->mean[ch] + (1 - m) * mean[ch]);
        stats->var[ch] = static_cast<T>(m * stats->var[ch] + (1 - m) * var[ch]);
      }
    }
  } else {
    if (!stats || !stats->ready()) {
      throw std::logic_error(
          "batchnorm: eval mode requires running statistics");
    }
    if (stats->mean.size() != c) {
      throw ShapeError("batchnorm: running statistics have " +
                       std::to_string(stats->mean.size()) + " channels, input has " +
                       std::to_string(c));
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      (*inv_std)[ch] = static_cast<T>(
          1.0 / std::sqrt(static_cast<double>(stats->var[ch]) + kBatchNormEpsilon));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const T xh = (x[i * c + ch] - stats->mean[ch]) * (*inv_std)[ch];
        (*xhat)[i * c + ch] = xh;
        out[i * c + ch] = ga[ch] * xh + be[ch];
      }
    }
  }

  return tape.record(
      std::move(out), {input, gamma, beta},
      [input, gamma, beta, xhat, inv_std, n, c, mode](Tape<T>& t, Var self) {
        const Tensor<T>& dy = t.grad_mut(self);
        const T* ga = t.value(gamma).ptr();
        std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t ch = 0; ch < c; ++ch) {
            sum_dy[ch] += dy[i * c + ch];
            sum_dy_xhat[ch] += dy[i * c + ch] * (*xhat)[i * c + ch];
          }
        }
        if (t.requires_grad(gamma)) {
          Tensor<T>& dg = t.grad_mut(gamma);
          for (std::size_t ch = 0; ch < c; ++ch) dg[ch] += static_cast<T>(sum_dy_xhat[ch]);
        }
        if (t.requires_grad(beta)) {
          Tensor<T>& db = t.grad_mut(beta);
          for (std::size_t ch = 0; ch < c; ++ch) db[ch] += static_cast<T>(sum_dy[ch]);
        }
        if (t.requires_grad(input)) {
          Tensor<T>& dx = t.grad_mut(input);
          if (mode == Mode::kTrain) {
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
              for (std::size_t ch = 0; ch < c; ++ch) {
                const double g = static_cast<double>(ga[ch]) * (*inv_std)[ch];
                dx[i * c + ch] += static_cast<T>(
                    g * (dy[i * c + ch] - inv_n * sum_dy[ch] -
                         (*xhat)[i * c + ch] * inv_n * sum_dy_xhat[ch]));
              }
            }
          } else {
            for (std::size_t i = 0; i < n; ++i)
              for (std::size_t ch = 0; ch < c; ++ch)
                dx[i * c + ch] += dy[i * c + ch] * ga[ch] * (*inv_std)[ch];
          }
        }
      },
      "batchnorm");
}

/// Affine map over the last axis: input [..., F], weight [F, G], bias [G].
template <class T>
Var dense(Tape<T>& tape, Var input, Var weight, Var bias) {
  using namespace detail;
  const Shape& s = tape.shape(input);
  const Shape& ws = tape.shape(weight);
  if (ws.size() != 2 || ws[0] != s.back()) {
    throw ShapeError("dense: input " + shape_str(s) + " incompatible with weight " +
                     shape_str(ws));
  }
  const std::size_t f = ws[0], gdim = ws[1];
  if (tape.shape(bias) != Shape{gdim}) {
    throw ShapeError("dense: bias must be [" + std::to_string(gdim) + "], got " +
                     shape_str(tape.shape(bias)));
  }
  const std::size_t rows = tape.value(input).size() / f;
  Shape os = s;
  os.back() = gdim;
  Tensor<T> out(os);
  {
    MapRM<T> y(out.ptr(), rows, gdim);
    y.noalias() = CMapRM<T>(tape.value(input).ptr(), rows, f) *
                  CMapRM<T>(tape.value(weight).ptr(), f, gdim);
    const T* b = tape.value(bias).ptr();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < gdim; ++j) y(r, j) += b[j];
  }
  return tape.record(
      std::move(out), {input, weight, bias},
      [input, weight, bias, rows, f, gdim](Tape<T>& t, Var self) {
        CMapRM<T> dy(t.grad_mut(self).ptr(), rows, gdim);
        if (t.requires_grad(input)) {
          MapRM<T> dx(t.grad_mut(input).ptr(), rows, f);
          dx.noalias() += dy * CMapRM<T>(t.value(weight).ptr(), f, gdim).transpose();
        }
        if (t.requires_grad(weight)) {
          MapRM<T> dw(t.grad_mut(weight).ptr(), f, gdim);
          dw.noalias() += CMapRM<T>(t.value(input).ptr(), rows, f).transpose() * dy;
        }
        if (t.requires_grad(bias)) {
          Tensor<T>& db = t.grad_mut(bias);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < gdim; ++j) db[j] += dy(r, j);
        }
      },
      "dense");
}

/// Adds a per-channel bias [C] to every position of a [..., C] tensor.
template <class T>
Var bias_add(Tape<T>& tape, Var input, Var bias) {
  const Shape& s = tape.shape(input);
  const std::size_t c = s.back();
  if (tape.shape(bias) != Shape{c}) {
    throw ShapeError("bias_add: bias must be [" + std::to_string(c) + "], got " +
                     shape_str(tape.shape(bias)));
  }
  Tensor<T> out = tape.value(input);
  const T* b = tape.value(bias).ptr();
  for (std::size_t r = 0; r < out.size(); r += c) {
    T* row = out.ptr() + r;
    for (std::size_t k = 0; k < c; ++k) row[k] += b[k];
  }
  return tape.record(
      std::move(out), {input, bias},
      [input, bias, c](Tape<T>& t, Var self) {
        const Tensor<T>& dy = t.grad_mut(self);
        if (t.requires_grad(input)) {
          Tensor<T>& dx = t.grad_mut(input);
          for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
        }
        if (t.requires_grad(bias)) {
          Tensor<T>& db = t.grad_mut(bias);
          T* g = db.ptr();
          for (std::size_t r = 0; r < dy.size(); r += c) {
            const T* row = dy.ptr() + r;
            for (std::size_t k = 0; k < c; ++k) g[k] += row[k];
          }
        }
      },
      "bias_add");
}

namespace detail {

// Elementwise op whose derivative is expressible through (x, y).
template <class T, class F, class D>
Var unary(Tape<T>& tape, Var input, F f, D dfdx, const char* name) {
  const Tensor<T>& x = tape.value(input);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return tape.record(
      std::move(out), {input},
      [input, dfdx](Tape<T>& t, Var self) {
        const Tensor<T>& dy = t.grad_mut(self);
        const Tensor<T>& xv = t.value(input);
        const Tensor<T>& yv = t.value(self);
        Tensor<T>& dx = t.grad_mut(input);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * dfdx(xv[i], yv[i]);
      },
      name);
}

}  // namespace detail

template <class T>
Var relu(Tape<T>& tape, Var x) {
  return detail::unary(
      tape, x, [](T v) { return v > T{0} ? v : T{0}; },
      [](T v, T) { return v > T{0} ? T{1} : T{0}; }, "relu");
}

template <class T>
Var tanh(Tape<T>& tape, Var x) {
  return detail::unary(
      tape, x, [](T v) { return std::tanh(v); },
      [](T, T y) { return T{1} - y * y; }, "tanh");
}

template <class T>
Var sigmoid(Tape<T>& tape, Var x) {
  return detail::unary(
      tape, x, [](T v) { return detail::stable_sigmoid(v); },
      [](T, T y) { return y * (T{1} - y); }, "sigmoid");
}

/// Numerically stable log-softmax over the last axis.
template <class T>
Var log_softmax(Tape<T>& tape, Var input) {
  const Tensor<T>& x = tape.value(input);
  const std::size_t c = x.shape().back();
  const std::size_t rows = x.size() / c;
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = x.ptr() + r * c;
    const T m = *std::max_element(row, row + c);
    T sum{0};
    for (std::size_t j = 0; j < c; ++j) sum += std::exp(row[j] - m);
    const T lse = m + std::log(sum);
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = row[j] - lse;
  }
  return tape.record(
      std::move(out), {input},
      [input, rows, c](Tape<T>& t, Var self) {
        const Tensor<T>& dy = t.grad_mut(self);
        const Tensor<T>& y = t.value(self);
        Tensor<T>& dx = t.grad_mut(input);
        for (std::size_t r = 0; r < rows; ++r) {
          T sum{0};
          for (std::size_t j = 0; j < c; ++j) sum += dy[r * c + j];
          for (std::size_t j = 0; j < c; ++j) {
            dx[r * c + j] += dy[r * c + j] - std::exp(y[r * c + j]) * sum;
          }
        }
      },
      "log_softmax");
}

/// View with a new shape of equal element count.
template <class T>
Var reshape(Tape<T>& tape, Var input, Shape shape) {
  if (shape_size(shape) != tape.value(input).size()) {
    throw ShapeError("reshape: cannot view " + shape_str(tape.shape(input)) +
                     " as " + shape_str(shape));
  }
  return tape.record(
      tape.value(input).reshaped(std::move(shape)), {input},
      [input](Tape<T>& t, Var self) {
        const Tensor<T>& dy = t.grad_mut(self);
        Tensor<T>& dx = t.grad_mut(input);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
      },
      "reshape");
}

/// Concatenation along the last axis; leading extents must agree.
template <class T>
Var concat_last(Tape<T>& tape, Var a, Var b) {
  Shape sa = tape.shape(a), sb = tape.shape(b);
  if (sa.size() != sb.size() ||
      !std::equal(sa.begin(), sa.end() - 1, sb.begin())) {
    throw ShapeError("concat_last: incompatible " + shape_str(sa) + " and " +
                     shape_str(sb));
  }
  const std::size_t ca = sa.back(), cb = sb.back();
  const std::size_t rows = tape.value(a).size() / ca;
  Shape so = sa;
  so.back() = ca + cb;
  Tensor<T> out(so);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(tape.value(a).ptr() + r * ca, ca, out.ptr() + r * (ca + cb));
    std::copy_n(tape.value(b).ptr() + r * cb, cb, out.ptr() + r * (ca + cb) + ca);
  }
  return tape.record(
      std::move(out), {a, b},
      [a, b, rows, ca, cb](Tape<T>& t, Var self) {
        const T* dy = t.grad_mut(self).ptr();
        if (t.requires_grad(a)) {
          T* da = t.grad_mut(a).ptr();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < ca; ++j) da[r * ca + j] += dy[r * (ca + cb) + j];
        }
        if (t.requires_grad(b)) {
          T* db = t.grad_mut(b).ptr();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < cb; ++j)
              db[r * cb + j] += dy[r * (ca + cb) + ca + j];
        }
      },
      "concat_last");
}

/// Sum of all elements, as a [1] tensor.
template <class T>
Var sum(Tape<T>& tape, Var input) {
  T s{0};
  for (T v : tape.value(input).data()) s += v;
  return tape.record(
      Tensor<T>::scalar(s), {input},
      [input](Tape<T>& t, Var self) {
        const T g = t.grad_mut(self)[0];
        Tensor<T>& dx = t.grad_mut(input);
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g;
      },
      "sum");
}

/// Elementwise product of equally shaped tensors.
template <class T>
Var mul(Tape<T>& tape, Var a, Var b) {
  if (tape.shape(a) != tape.shape(b)) {
    throw ShapeError("mul: shapes differ " + shape_str(tape.shape(a)) + " vs " +
                     shape_str(tape.shape(b)));
  }
  Tensor<T> out = tape.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= tape.value(b)[i];
  return tape.record(
      std::move(out), {a, b},
      [a, b](Tape<T>& t, Var self) {
        const Tensor<T>& dy = t.grad_mut(self);
        if (t.requires_grad(a)) {
          Tensor<T>& da = t.grad_mut(a);
          for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * t.value(b)[i];
        }
        if (t.requires_grad(b)) {
          Tensor<T>& db = t.grad_mut(b);
          for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * t.value(a)[i];
        }
      },
      "mul");
}

/// Unidirectional LSTM over input [N, T, F] with zero initial state.
///
/// Gate layout along the 4H axis is (input, forget, candidate, output):
///   i = sigmoid(.), f = sigmoid(.), g = tanh(.), o = sigmoid(.)
///   c_t = f * c_{t-1} + i * g,  h_t = o * tanh(c_t)
/// With `reverse` the sequence is consumed from the last step to the first;
/// outputs stay aligned with their input positions.
template <class T>
Var lstm(Tape<T>& tape, Var input, Var w_input, Var w_recurrent, Var bias,
         bool reverse) {
  using namespace detail;
  const Shape& s = tape.shape(input);
  if (s.size() != 3) {
    throw ShapeError("lstm: input must be [N,T,F], got " + shape_str(s));
  }
  const std::size_t n = s[0], steps = s[1], f = s[2];
  const Shape& wx = tape.shape(w_input);
  if (wx.size() != 2 || wx[0] != f || wx[1] % 4 != 0) {
    throw ShapeError("lstm: input weight must be [" + std::to_string(f) +
                     ",4H], got " + shape_str(wx));
  }
  const std::size_t h = wx[1] / 4;
  if (tape.shape(w_recurrent) != Shape{h, 4 * h} || tape.shape(bias) != Shape{4 * h}) {
    throw ShapeError("lstm: recurrent weight must be [H,4H] and bias [4H] for H=" +
                     std::to_string(h));
  }
  const std::size_t g4 = 4 * h;

  // Activated gates per (step, sample) in processing order, and cell states.
  struct Cache {
    std::vector<T> gates;  // [steps][n][4h]
    std::vector<T> cell;   // [steps][n][h]
    std::vector<T> tanh_cell;
  };
  auto cache = std::make_shared<Cache>();
  cache->gates.resize(steps * n * g4);
  cache->cell.resize(steps * n * h);
  cache->tanh_cell.resize(steps * n * h);

  MatRM<T> xw = CMapRM<T>(tape.value(input).ptr(), n * steps, f) *
                CMapRM<T>(tape.value(w_input).ptr(), f, g4);
  const T* b = tape.value(bias).ptr();
  CMapRM<T> wh(tape.value(w_recurrent).ptr(), h, g4);

  Tensor<T> out(Shape{n, steps, h});
  MatRM<T> h_prev = MatRM<T>::Zero(n, h);
  MatRM<T> pre(n, g4);
  std::vector<T> c_prev(n * h, T{0});
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t step = reverse ? steps - 1 - k : k;
    pre.noalias() = h_prev * wh;
    T* gates = cache->gates.data() + k * n * g4;
    T* cell = cache->cell.data() + k * n * h;
    T* tcell = cache->tanh_cell.data() + k * n * h;
    for (std::size_t i = 0; i < n; ++i) {
      const T* xrow = xw.data() + (i * steps + step) * g4;
      T* grow = gates + i * g4;
      for (std::size_t j = 0; j < g4; ++j) grow[j] = pre(i, j) + xrow[j] + b[j];
      using Arr = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;
      Arr(grow, 2 * h) = Arr(grow, 2 * h).logistic();
      Arr(grow + 2 * h, h) = Arr(grow + 2 * h, h).tanh();
      Arr(grow + 3 * h, h) = Arr(grow + 3 * h, h).logistic();
      for (std::size_t j = 0; j < h; ++j)
        cell[i * h + j] = grow[h + j] * c_prev[i * h + j] + grow[j] * grow[2 * h + j];
      Arr(tcell + i * h, h) = Arr(cell + i * h, h).tanh();
      for (std::size_t j = 0; j < h; ++j) {
        const T hv = grow[3 * h + j] * tcell[i * h + j];
        h_prev(i, j) = hv;
        out.ptr()[(i * steps + step) * h + j] = hv;
      }
    }
    std::copy_n(cell, n * h, c_prev.begin());
  }

  return tape.record(
      std::move(out), {input, w_input, w_recurrent, bias},
      [input, w_input, w_recurrent, bias, cache, n, steps, f, h, g4, reverse](
          Tape<T>& t, Var self) {
        const T* dy = t.grad_mut(self).ptr();
        const T* y = t.value(self).ptr();
        CMapRM<T> wh(t.value(w_recurrent).ptr(), h, g4);
        // Pre-activation gradients laid out like the input rows [n*steps, 4h].
        MatRM<T> dpre = MatRM<T>::Zero(n * steps, g4);
        // Previous hidden state per row, for the recurrent weight gradient.
        MatRM<T> h_prev_rows = MatRM<T>::Zero(n * steps, h);
        MatRM<T> dh_next = MatRM<T>::Zero(n, h);
        MatRM<T> dstep(n, g4);
        std::vector<T> dc_next(n * h, T{0});
        for (std::size_t k = steps; k-- > 0;) {
          const std::size_t step = reverse ? steps - 1 - k : k;
          const T* gates = cache->gates.data() + k * n * g4;
          const T* tcell = cache->tanh_cell.data() + k * n * h;
          const T* cprev = k > 0 ? cache->cell.data() + (k - 1) * n * h : nullptr;
          for (std::size_t i = 0; i < n; ++i) {
            const T* grow = gates + i * g4;
            const std::size_t row = i * steps + step;
            for (std::size_t j = 0; j < h; ++j) {
              const T ig = grow[j], fg = grow[h + j], cg = grow[2 * h + j],
                      og = grow[3 * h + j];
              const T tc = tcell[i * h + j];
              const T dh = dy[row * h + j] + dh_next(i, j);
              const T dc = dh * og * (T{1} - tc * tc) + dc_next[i * h + j];
              const T cp = cprev ? cprev[i * h + j] : T{0};
              dstep(i, j) = dc * cg * ig * (T{1} - ig);
              dstep(i, h + j) = dc * cp * fg * (T{1} - fg);
              dstep(i, 2 * h + j) = dc * ig * (T{1} - cg * cg);
              dstep(i, 3 * h + j) = dh * tc * og * (T{1} - og);
              dc_next[i * h + j] = dc * fg;
            }
            dpre.row(row) = dstep.row(i);
            if (k > 0) {
              const std::size_t prev_step = reverse ? step + 1 : step - 1;
              for (std::size_t j = 0; j < h; ++j)
                h_prev_rows(row, j) = y[(i * steps + prev_step) * h + j];
            }
          }
          dh_next.noalias() = dstep * wh.transpose();
        }
        if (t.requires_grad(input)) {
          MapRM<T> dx(t.grad_mut(input).ptr(), n * steps, f);
          dx.noalias() += dpre * CMapRM<T>(t.value(w_input).ptr(), f, g4).transpose();
        }
        if (t.requires_grad(w_input)) {
          MapRM<T> dwx(t.grad_mut(w_input).ptr(), f, g4);
          dwx.noalias() +=
              CMapRM<T>(t.value(input).ptr(), n * steps, f).transpose() * dpre;
        }
        if (t.requires_grad(w_recurrent)) {
          MapRM<T> dwh(t.grad_mut(w_recurrent).ptr(), h, g4);
          dwh.noalias() += h_prev_rows.transpose() * dpre;
        }
        if (t.requires_grad(bias)) {
          Tensor<T>& db = t.grad_mut(bias);
          for (std::size_t r = 0; r < n * steps; ++r)
            for (std::size_t j = 0; j < g4; ++j) db[j] += dpre(r, j);
        }
      },
      reverse ? "lstm_reverse" : "lstm");
}

}  // namespace cdhwr
