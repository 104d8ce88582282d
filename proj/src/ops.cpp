// Copyright 2026 The MSPE Authors
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

#include "mspe/ops.hpp"

#include "mspe/random.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mspe {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

int wrap_index(int i, int n) {
  i %= n;
  return i < 0 ? i + n : i;
}

// Source index for each (tap, output) pair along one axis, or -1 for a
// zero-padded position.
std::vector<int> tap_table(int in, int out, int kernel, int stride, int pad, Padding padding) {
  std::vector<int> table(static_cast<std::size_t>(kernel) * out);
  for (int k = 0; k < kernel; ++k) {
    for (int o = 0; o < out; ++o) {
      int i = o * stride + k - pad;
      if (padding == Padding::Circular) {
        i = wrap_index(i, in);
      } else if (i < 0 || i >= in) {
        i = -1;
      }
      table[static_cast<std::size_t>(k) * out + o] = i;
    }
  }
  return table;
}

struct ConvGeometry {
  int cin, h, w, kh, kw, ho, wo;
  std::vector<int> rows, cols;

  std::int64_t k() const { return static_cast<std::int64_t>(cin) * kh * kw; }
  std::int64_t p() const { return static_cast<std::int64_t>(ho) * wo; }

  void im2col(const float* x, RowMat& out) const {
    out.resize(k(), p());
    std::int64_t r = 0;
    for (int c = 0; c < cin; ++c) {
      const float* plane = x + static_cast<std::int64_t>(c) * h * w;
      for (int ki = 0; ki < kh; ++ki) {
        for (int kj = 0; kj < kw; ++kj, ++r) {
          float* dst = out.data() + r * p();
          const int* ct = cols.data() + static_cast<std::size_t>(kj) * wo;
          for (int oh = 0; oh < ho; ++oh) {
            const int ih = rows[static_cast<std::size_t>(ki) * ho + oh];
            float* d = dst + static_cast<std::int64_t>(oh) * wo;
            if (ih < 0) {
              std::fill(d, d + wo, 0.0f);
              continue;
            }
            const float* src = plane + static_cast<std::int64_t>(ih) * w;
            for (int ow = 0; ow < wo; ++ow) d[ow] = ct[ow] < 0 ? 0.0f : src[ct[ow]];
          }
        }
      }
    }
  }

  void col2im(const RowMat& cols_grad, float* dx) const {
    std::int64_t r = 0;
    for (int c = 0; c < cin; ++c) {
      float* plane = dx + static_cast<std::int64_t>(c) * h * w;
      for (int ki = 0; ki < kh; ++ki) {
        for (int kj = 0; kj < kw; ++kj, ++r) {
          const float* src = cols_grad.data() + r * p();
          const int* ct = cols.data() + static_cast<std::size_t>(kj) * wo;
          for (int oh = 0; oh < ho; ++oh) {
            const int ih = rows[static_cast<std::size_t>(ki) * ho + oh];
            if (ih < 0) continue;
            float* d = plane + static_cast<std::int64_t>(ih) * w;
            const float* s = src + static_cast<std::int64_t>(oh) * wo;
            for (int ow = 0; ow < wo; ++ow) {
              if (ct[ow] >= 0) d[ct[ow]] += s[ow];
            }
          }
        }
      }
    }
  }
};

// y[co, p] = bias[co] + sum_k w[co, k] * cols[k, p], always accumulated in
// increasing k. A blocked GEMM would sum edge columns in a different order,
// which breaks bit-level agreement between rolled inputs.
template <int CB>
void conv_block(const float* w, const float* cols, const float* bias, float* y, int co0, std::int64_t K,
                std::int64_t P, std::int64_t p0, int len) {
  constexpr int PB = 64;
  alignas(64) float acc[CB][PB] = {};
  for (std::int64_t k = 0; k < K; ++k) {
    const float* x = cols + k * P + p0;
    for (int i = 0; i < CB; ++i) {
      const float wv = w[(co0 + i) * K + k];
      float* a = acc[i];
      if (len == PB) {
        for (int j = 0; j < PB; ++j) a[j] += wv * x[j];
      } else {
        for (int j = 0; j < len; ++j) a[j] += wv * x[j];
      }
    }
  }
  for (int i = 0; i < CB; ++i) {
    const float b = bias ? bias[co0 + i] : 0.0f;
    float* dst = y + (co0 + i) * P + p0;
    for (int j = 0; j < len; ++j) dst[j] = acc[i][j] + b;
  }
}

void conv_forward_gemm(const float* w, const float* cols, const float* bias, float* y, int cout, std::int64_t K,
                       std::int64_t P) {
  constexpr int PB = 64;
  for (std::int64_t p0 = 0; p0 < P; p0 += PB) {
    const int len = static_cast<int>(std::min<std::int64_t>(PB, P - p0));
    int co = 0;
    for (; co + 4 <= cout; co += 4) conv_block<4>(w, cols, bias, y, co, K, P, p0, len);
    for (; co < cout; ++co) conv_block<1>(w, cols, bias, y, co, K, P, p0, len);
  }
}

// Applies the separable [1,2,1]/4 stencil along both axes of every plane.
Eigen::ArrayXf blur_planes(const Eigen::ArrayXf& in, int planes, int h, int w, Padding padding) {
  using Row = Eigen::Map<Eigen::ArrayXf>;
  using CRow = Eigen::Map<const Eigen::ArrayXf>;
  const bool circ = padding == Padding::Circular;
  Eigen::ArrayXf tmp(in.size()), out(in.size());
  std::vector<float> padded(static_cast<std::size_t>(w) + 2);
  for (int p = 0; p < planes; ++p) {
    const float* src = in.data() + static_cast<std::int64_t>(p) * h * w;
    float* t = tmp.data() + static_cast<std::int64_t>(p) * h * w;
    float* dst = out.data() + static_cast<std::int64_t>(p) * h * w;
    for (int i = 0; i < h; ++i) {
      const float* line = src + static_cast<std::int64_t>(i) * w;
      float* o = t + static_cast<std::int64_t>(i) * w;
      // Edges go through the same loop as the interior so every pixel rounds alike.
      std::copy(line, line + w, padded.begin() + 1);
      padded[0] = circ ? line[w - 1] : 0.0f;
      padded[w + 1] = circ ? line[0] : 0.0f;
      const float* q = padded.data();
      for (int j = 0; j < w; ++j) o[j] = 0.5f * q[j + 1] + 0.25f * q[j] + 0.25f * q[j + 2];
    }
    for (int i = 0; i < h; ++i) {
      Row o(dst + static_cast<std::int64_t>(i) * w, w);
      o = 0.5f * CRow(t + static_cast<std::int64_t>(i) * w, w);
      const int up = i - 1, down = i + 1;
      if (up >= 0) {
        o += 0.25f * CRow(t + static_cast<std::int64_t>(up) * w, w);
      } else if (circ) {
        o += 0.25f * CRow(t + static_cast<std::int64_t>(h - 1) * w, w);
      }
      if (down < h) {
        o += 0.25f * CRow(t + static_cast<std::int64_t>(down) * w, w);
      } else if (circ) {
        o += 0.25f * CRow(t, w);
      }
    }
  }
  return out;
}

Tensor nearest2x(const Tensor& x) {
  const Shape s = x.shape();
  const Shape o{s.n, s.c, 2 * s.h, 2 * s.w};
  Eigen::ArrayXf out(o.numel());
  const std::int64_t planes = static_cast<std::int64_t>(s.n) * s.c;
  for (std::int64_t p = 0; p < planes; ++p) {
    const float* src = x.data().data() + p * s.plane();
    float* dst = out.data() + p * o.plane();
    for (int i = 0; i < o.h; ++i) {
      for (int j = 0; j < o.w; ++j) dst[static_cast<std::int64_t>(i) * o.w + j] = src[(i / 2) * s.w + j / 2];
    }
  }
  return Tensor::make_result(o, std::move(out), {x}, [s, o, planes](detail::Node& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (std::int64_t p = 0; p < planes; ++p) {
      const float* src = self.grad.data() + p * o.plane();
      float* dst = g.data() + p * s.plane();
      for (int i = 0; i < o.h; ++i) {
        for (int j = 0; j < o.w; ++j) dst[(i / 2) * s.w + j / 2] += src[static_cast<std::int64_t>(i) * o.w + j];
      }
    }
  });
}

// Two-tap linear interpolation weights along one axis (half-pixel centres).
struct Taps {
  std::vector<int> i0, i1;
  std::vector<float> t;
};

Taps bilinear_taps(int in, int out) {
  Taps taps;
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int a = static_cast<int>(std::floor(src));
    const int b = std::min(a + 1, in - 1);
    taps.i0.push_back(a);
    taps.i1.push_back(b);
    taps.t.push_back(static_cast<float>(src - a));
  }
  return taps;
}

}  // namespace

ConvParams make_conv(int in_channels, int out_channels, int kernel, Padding padding, std::uint64_t seed,
                     std::uint64_t stream, float gain) {
  require(in_channels > 0 && out_channels > 0 && kernel > 0, "make_conv: bad geometry");
  const double fan_in = static_cast<double>(in_channels) * kernel * kernel;
  const double stddev = gain * std::sqrt(2.0 / ((1.0 + 0.2 * 0.2) * fan_in));
  ConvParams p;
  p.weight = gaussian({out_channels, in_channels, kernel, kernel}, seed, stream, static_cast<float>(stddev));
  p.weight.set_requires_grad(true);
  p.bias = Tensor::zeros({1, out_channels, 1, 1}, true);
  p.padding = padding;
  return p;
}

Tensor conv2d(const Tensor& x, const ConvParams& p) {
  const Shape xs = x.shape();
  const Shape ws = p.weight.shape();
  require(ws.c == xs.c, "conv2d: input has " + std::to_string(xs.c) + " channels, weight expects " +
                            std::to_string(ws.c));
  require(ws.h % 2 == 1 && ws.w % 2 == 1, "conv2d: kernel sizes must be odd");
  require(p.stride >= 1, "conv2d: stride must be >= 1");
  if (p.bias.defined()) require(p.bias.shape() == Shape{1, ws.n, 1, 1}, "conv2d: bias shape mismatch");

  auto geo = std::make_shared<ConvGeometry>();
  geo->cin = xs.c;
  geo->h = xs.h;
  geo->w = xs.w;
  geo->kh = ws.h;
  geo->kw = ws.w;
  const int ph = ws.h / 2, pw = ws.w / 2;
  geo->ho = (xs.h + 2 * ph - ws.h) / p.stride + 1;
  geo->wo = (xs.w + 2 * pw - ws.w) / p.stride + 1;
  geo->rows = tap_table(xs.h, geo->ho, ws.h, p.stride, ph, p.padding);
  geo->cols = tap_table(xs.w, geo->wo, ws.w, p.stride, pw, p.padding);

  const int cout = ws.n;
  const Shape os{xs.n, cout, geo->ho, geo->wo};
  Eigen::ArrayXf out(os.numel());
  RowMat cols;
  for (int n = 0; n < xs.n; ++n) {
    geo->im2col(x.data().data() + n * static_cast<std::int64_t>(xs.c) * xs.plane(), cols);
    conv_forward_gemm(p.weight.data().data(), cols.data(), p.bias.defined() ? p.bias.data().data() : nullptr,
                      out.data() + n * static_cast<std::int64_t>(cout) * geo->p(), cout, geo->k(), geo->p());
  }

  std::vector<Tensor> inputs{x, p.weight};
  if (p.bias.defined()) inputs.push_back(p.bias);
  return Tensor::make_result(os, std::move(out), std::move(inputs), [geo, xs, os](detail::Node& self) {
    auto& xin = *self.inputs[0];
    auto& win = *self.inputs[1];
    detail::Node* bin = self.inputs.size() > 2 ? self.inputs[2].get() : nullptr;
    const int cout = os.c;
    ConstRowMap wm(win.value.data(), cout, geo->k());
    RowMat cols, dcols;
    for (int n = 0; n < xs.n; ++n) {
      ConstRowMap dy(self.grad.data() + n * static_cast<std::int64_t>(cout) * geo->p(), cout, geo->p());
      if (win.requires_grad) {
        geo->im2col(xin.value.data() + n * static_cast<std::int64_t>(xs.c) * xs.plane(), cols);
        RowMap dw(win.grad_buffer().data(), cout, geo->k());
        dw.noalias() += dy * cols.transpose();
      }
      if (bin && bin->requires_grad) {
        Eigen::Map<Eigen::VectorXf> db(bin->grad_buffer().data(), cout);
        db += dy.rowwise().sum();
      }
      if (xin.requires_grad) {
        dcols.noalias() = wm.transpose() * dy;
        geo->col2im(dcols, xin.grad_buffer().data() + n * static_cast<std::int64_t>(xs.c) * xs.plane());
      }
    }
  });
}

Tensor blur3x3(const Tensor& x, Padding padding) {
  const Shape s = x.shape();
  const int planes = s.n * s.c;
  return Tensor::make_result(s, blur_planes(x.data(), planes, s.h, s.w, padding), {x},
                             [s, planes, padding](detail::Node& self) {
                               auto& in = *self.inputs[0];
                               if (!in.requires_grad) return;
                               // The stencil is symmetric, so it is its own adjoint.
                               in.grad_buffer() += blur_planes(self.grad, planes, s.h, s.w, padding);
                             });
}

Tensor upsample2x_blur(const Tensor& x, Padding padding) { return blur3x3(nearest2x(x), padding); }

Tensor avg_pool2(const Tensor& x) {
  const Shape s = x.shape();
  require(s.h % 2 == 0 && s.w % 2 == 0, "avg_pool2: spatial dims must be even, got " + s.str());
  const Shape o{s.n, s.c, s.h / 2, s.w / 2};
  const std::int64_t planes = static_cast<std::int64_t>(s.n) * s.c;
  Eigen::ArrayXf out(o.numel());
  for (std::int64_t p = 0; p < planes; ++p) {
    const float* src = x.data().data() + p * s.plane();
    float* dst = out.data() + p * o.plane();
    for (int i = 0; i < o.h; ++i) {
      for (int j = 0; j < o.w; ++j) {
        const float* a = src + static_cast<std::int64_t>(2 * i) * s.w + 2 * j;
        dst[static_cast<std::int64_t>(i) * o.w + j] = 0.25f * (a[0] + a[1] + a[s.w] + a[s.w + 1]);
      }
    }
  }
  return Tensor::make_result(o, std::move(out), {x}, [s, o, planes](detail::Node& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (std::int64_t p = 0; p < planes; ++p) {
      const float* src = self.grad.data() + p * o.plane();
      float* dst = g.data() + p * s.plane();
      for (int i = 0; i < o.h; ++i) {
        for (int j = 0; j < o.w; ++j) {
          const float v = 0.25f * src[static_cast<std::int64_t>(i) * o.w + j];
          float* a = dst + static_cast<std::int64_t>(2 * i) * s.w + 2 * j;
          a[0] += v;
          a[1] += v;
          a[s.w] += v;
          a[s.w + 1] += v;
        }
      }
    }
  });
}

Tensor leaky_relu(const Tensor& x, float slope) {
  Eigen::ArrayXf out = (x.data() > 0).select(x.data(), slope * x.data());
  return Tensor::make_result(x.shape(), std::move(out), {x}, [slope](detail::Node& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    in.grad_buffer() += (in.value > 0).select(self.grad, slope * self.grad);
  });
}

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(),
          std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  return Tensor::make_result(a.shape(), a.data() + b.data(), {a, b}, [](detail::Node& self) {
    for (auto& in : self.inputs) {
      if (in->requires_grad) in->grad_buffer() += self.grad;
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same(a, b, "sub");
  return Tensor::make_result(a.shape(), a.data() - b.data(), {a, b}, [](detail::Node& self) {
    if (self.inputs[0]->requires_grad) self.inputs[0]->grad_buffer() += self.grad;
    if (self.inputs[1]->requires_grad) self.inputs[1]->grad_buffer() -= self.grad;
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul");
  return Tensor::make_result(a.shape(), a.data() * b.data(), {a, b}, [](detail::Node& self) {
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    if (x.requires_grad) x.grad_buffer() += self.grad * y.value;
    if (y.requires_grad) y.grad_buffer() += self.grad * x.value;
  });
}

Tensor scale(const Tensor& a, float s) {
  return Tensor::make_result(a.shape(), s * a.data(), {a}, [s](detail::Node& self) {
    if (self.inputs[0]->requires_grad) self.inputs[0]->grad_buffer() += s * self.grad;
  });
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
  const Shape s = x.shape();
  const Shape b = bias.shape();
  require(b.c == s.c && b.h == 1 && b.w == 1 && (b.n == 1 || b.n == s.n),
          "add_channel_bias: bias " + b.str() + " incompatible with " + s.str());
  Eigen::ArrayXf out = x.data();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float v = bias.data()[(b.n == 1 ? 0 : n) * s.c + c];
      out.segment((static_cast<std::int64_t>(n) * s.c + c) * s.plane(), s.plane()) += v;
    }
  }
  return Tensor::make_result(s, std::move(out), {x, bias}, [s, b](detail::Node& self) {
    if (self.inputs[0]->requires_grad) self.inputs[0]->grad_buffer() += self.grad;
    auto& bin = *self.inputs[1];
    if (!bin.requires_grad) return;
    auto& g = bin.grad_buffer();
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        g[(b.n == 1 ? 0 : n) * s.c + c] +=
            self.grad.segment((static_cast<std::int64_t>(n) * s.c + c) * s.plane(), s.plane()).sum();
      }
    }
  });
}

Tensor add_scaled(const Tensor& h, const Tensor& gamma, const Tensor& t) {
  const Shape s = h.shape();
  require(gamma.numel() == 1, "add_scaled: gamma must be a scalar tensor");
  require(t.shape() == Shape{1, s.c, s.h, s.w}, "add_scaled: map " + t.shape().str() +
                                                    " does not match feature " + s.str());
  const std::int64_t per = t.numel();
  Eigen::ArrayXf out = h.data();
  const float g = gamma.data()[0];
  for (int n = 0; n < s.n; ++n) out.segment(n * per, per) += g * t.data();
  return Tensor::make_result(s, std::move(out), {h, gamma, t}, [s, per](detail::Node& self) {
    if (self.inputs[0]->requires_grad) self.inputs[0]->grad_buffer() += self.grad;
    auto& gin = *self.inputs[1];
    if (!gin.requires_grad) return;
    double acc = 0.0;
    for (int n = 0; n < s.n; ++n) {
      acc += (self.grad.segment(n * per, per) * self.inputs[2]->value).cast<double>().sum();
    }
    gin.grad_buffer()[0] += static_cast<float>(acc);
  });
}

Tensor add_scaled_pe(const Tensor& h, const Tensor& gamma, const PEGrid<float>& pe) {
  const Shape s = h.shape();
  require(pe.channels == s.c && pe.height == s.h && pe.width == s.w,
          "add_scaled_pe: grid (" + std::to_string(pe.channels) + ", " + std::to_string(pe.height) + ", " +
              std::to_string(pe.width) + ") does not match feature " + s.str());
  return add_scaled(h, gamma, to_tensor(pe));
}

Tensor add_noise(const Tensor& h, const Tensor& strength, const Tensor& noise) {
  const Shape s = h.shape();
  require(strength.numel() == 1, "add_noise: strength must be a scalar tensor");
  require(noise.shape() == Shape{s.n, 1, s.h, s.w},
          "add_noise: noise " + noise.shape().str() + " does not match feature " + s.str());
  Eigen::ArrayXf out = h.data();
  const float k = strength.data()[0];
  for (int n = 0; n < s.n; ++n) {
    const auto eps = noise.data().segment(n * s.plane(), s.plane());
    for (int c = 0; c < s.c; ++c) out.segment((static_cast<std::int64_t>(n) * s.c + c) * s.plane(), s.plane()) += k * eps;
  }
  return Tensor::make_result(s, std::move(out), {h, strength, noise}, [s](detail::Node& self) {
    if (self.inputs[0]->requires_grad) self.inputs[0]->grad_buffer() += self.grad;
    auto& kin = *self.inputs[1];
    if (!kin.requires_grad) return;
    double acc = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const auto eps = self.inputs[2]->value.segment(n * s.plane(), s.plane());
      for (int c = 0; c < s.c; ++c) {
        acc += (self.grad.segment((static_cast<std::int64_t>(n) * s.c + c) * s.plane(), s.plane()) * eps)
                   .cast<double>()
                   .sum();
      }
    }
    kin.grad_buffer()[0] += static_cast<float>(acc);
  });
}

Tensor repeat_batch(const Tensor& t, int n) {
  const Shape s = t.shape();
  require(s.n == 1 && n >= 1, "repeat_batch: expects a batch-1 tensor");
  const std::int64_t per = t.numel();
  Eigen::ArrayXf out(per * n);
  for (int i = 0; i < n; ++i) out.segment(i * per, per) = t.data();
  return Tensor::make_result({n, s.c, s.h, s.w}, std::move(out), {t}, [n, per](detail::Node& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (int i = 0; i < n; ++i) g += self.grad.segment(i * per, per);
  });
}

Tensor gather_batch(const Tensor& x, const std::vector<int>& index) {
  const Shape s = x.shape();
  require(!index.empty(), "gather_batch: empty index");
  for (int i : index) require(i >= 0 && i < s.n, "gather_batch: index " + std::to_string(i) + " out of range");
  const std::int64_t per = s.c * s.plane();
  const int n = static_cast<int>(index.size());
  Eigen::ArrayXf out(per * n);
  for (int k = 0; k < n; ++k) out.segment(k * per, per) = x.data().segment(index[k] * per, per);
  return Tensor::make_result({n, s.c, s.h, s.w}, std::move(out), {x}, [index, per](detail::Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t k = 0; k < index.size(); ++k) g.segment(index[k] * per, per) += self.grad.segment(k * per, per);
  });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape(), sb = b.shape();
  require(sa.n == sb.n && sa.h == sb.h && sa.w == sb.w,
          "concat_channels: " + sa.str() + " vs " + sb.str());
  const Shape o{sa.n, sa.c + sb.c, sa.h, sa.w};
  const std::int64_t pa = sa.c * sa.plane(), pb = sb.c * sb.plane();
  Eigen::ArrayXf out(o.numel());
  for (int n = 0; n < sa.n; ++n) {
    out.segment(n * (pa + pb), pa) = a.data().segment(n * pa, pa);
    out.segment(n * (pa + pb) + pa, pb) = b.data().segment(n * pb, pb);
  }
  return Tensor::make_result(o, std::move(out), {a, b}, [o, pa, pb](detail::Node& self) {
    for (int n = 0; n < o.n; ++n) {
      if (self.inputs[0]->requires_grad) {
        self.inputs[0]->grad_buffer().segment(n * pa, pa) += self.grad.segment(n * (pa + pb), pa);
      }
      if (self.inputs[1]->requires_grad) {
        self.inputs[1]->grad_buffer().segment(n * pb, pb) += self.grad.segment(n * (pa + pb) + pa, pb);
      }
    }
  });
}

Tensor resize_bilinear(const Tensor& x, int height, int width) {
  const Shape s = x.shape();
  require(height >= 1 && width >= 1, "resize_bilinear: target must be >= 1");
  if (s.h == height && s.w == width) return x;
  const Shape o{s.n, s.c, height, width};
  auto rt = std::make_shared<Taps>(bilinear_taps(s.h, height));
  auto ct = std::make_shared<Taps>(bilinear_taps(s.w, width));
  const std::int64_t planes = static_cast<std::int64_t>(s.n) * s.c;
  Eigen::ArrayXf out(o.numel());
  for (std::int64_t p = 0; p < planes; ++p) {
    const float* src = x.data().data() + p * s.plane();
    float* dst = out.data() + p * o.plane();
    for (int i = 0; i < height; ++i) {
      const float* r0 = src + static_cast<std::int64_t>(rt->i0[i]) * s.w;
      const float* r1 = src + static_cast<std::int64_t>(rt->i1[i]) * s.w;
      const float ti = rt->t[i];
      for (int j = 0; j < width; ++j) {
        const float tj = ct->t[j];
        const float top = (1 - tj) * r0[ct->i0[j]] + tj * r0[ct->i1[j]];
        const float bot = (1 - tj) * r1[ct->i0[j]] + tj * r1[ct->i1[j]];
        dst[static_cast<std::int64_t>(i) * width + j] = (1 - ti) * top + ti * bot;
      }
    }
  }
  return Tensor::make_result(o, std::move(out), {x}, [s, o, rt, ct, planes](detail::Node& self) {
    auto& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.grad_buffer();
    for (std::int64_t p = 0; p < planes; ++p) {
      const float* src = self.grad.data() + p * o.plane();
      float* dst = g.data() + p * s.plane();
      for (int i = 0; i < o.h; ++i) {
        float* r0 = dst + static_cast<std::int64_t>(rt->i0[i]) * s.w;
        float* r1 = dst + static_cast<std::int64_t>(rt->i1[i]) * s.w;
        const float ti = rt->t[i];
        for (int j = 0; j < o.w; ++j) {
          const float v = src[static_cast<std::int64_t>(i) * o.w + j];
          const float tj = ct->t[j];
          r0[ct->i0[j]] += (1 - ti) * (1 - tj) * v;
          r0[ct->i1[j]] += (1 - ti) * tj * v;
          r1[ct->i0[j]] += ti * (1 - tj) * v;
          r1[ct->i1[j]] += ti * tj * v;
        }
      }
    }
  });
}

Tensor sum(const Tensor& x) {
  const float total = static_cast<float>(x.data().cast<double>().sum());
  return Tensor::make_result({1, 1, 1, 1}, Eigen::ArrayXf::Constant(1, total), {x}, [](detail::Node& self) {
    auto& in = *self.inputs[0];
    if (in.requires_grad) in.grad_buffer() += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  const double n = static_cast<double>(x.numel());
  const float m = static_cast<float>(x.data().cast<double>().sum() / n);
  return Tensor::make_result({1, 1, 1, 1}, Eigen::ArrayXf::Constant(1, m), {x}, [n](detail::Node& self) {
    auto& in = *self.inputs[0];
    if (in.requires_grad) in.grad_buffer() += static_cast<float>(self.grad[0] / n);
  });
}

Tensor mse_loss(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mse_loss");
  const double n = static_cast<double>(a.numel());
  const float m = static_cast<float>((a.data() - b.data()).cast<double>().square().sum() / n);
  return Tensor::make_result({1, 1, 1, 1}, Eigen::ArrayXf::Constant(1, m), {a, b}, [n](detail::Node& self) {
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    const float k = static_cast<float>(2.0 * self.grad[0] / n);
    if (x.requires_grad) x.grad_buffer() += k * (x.value - y.value);
    if (y.requires_grad) y.grad_buffer() -= k * (x.value - y.value);
  });
}

Tensor roll(const Tensor& x, int sh, int sw) {
  const Shape s = x.shape();
  Eigen::ArrayXf out(s.numel());
  const std::int64_t planes = static_cast<std::int64_t>(s.n) * s.c;
  for (std::int64_t p = 0; p < planes; ++p) {
    const float* src = x.data().data() + p * s.plane();
    float* dst = out.data() + p * s.plane();
    for (int i = 0; i < s.h; ++i) {
      const int si = wrap_index(i - sh, s.h);
      for (int j = 0; j < s.w; ++j) dst[static_cast<std::int64_t>(i) * s.w + j] = src[static_cast<std::int64_t>(si) * s.w + wrap_index(j - sw, s.w)];
    }
  }
  return Tensor::from_array(s, std::move(out));
}

Tensor gaussian(Shape shape, std::uint64_t seed, std::uint64_t stream, float stddev) {
  Eigen::ArrayXf v(shape.numel());
  Philox rng(seed, stream);
  rng.fill_gaussian({v.data(), static_cast<std::size_t>(v.size())}, stddev);
  return Tensor::from_array(shape, std::move(v));
}

Tensor to_tensor(const PEGrid<float>& pe) {
  return Tensor::from_array({1, pe.channels, pe.height, pe.width}, pe.data);
}

Tensor crop_wrapped(const Tensor& x, int top, int left, int height, int width) {
  const Shape s = x.shape();
  require(height >= 1 && width >= 1, "crop_wrapped: empty crop");
  const Shape o{s.n, s.c, height, width};
  Eigen::ArrayXf out(o.numel());
  const std::int64_t planes = static_cast<std::int64_t>(s.n) * s.c;
  for (std::int64_t p = 0; p < planes; ++p) {
    const float* src = x.data().data() + p * s.plane();
    float* dst = out.data() + p * o.plane();
    for (int i = 0; i < height; ++i) {
      const int si = wrap_index(top + i, s.h);
      for (int j = 0; j < width; ++j) dst[static_cast<std::int64_t>(i) * width + j] = src[static_cast<std::int64_t>(si) * s.w + wrap_index(left + j, s.w)];
    }
  }
  return Tensor::from_array(o, std::move(out));
}

}  // namespace mspe
