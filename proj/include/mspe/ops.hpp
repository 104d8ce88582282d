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

#pragma once

#include "mspe/pe.hpp"
#include "mspe/tensor.hpp"

#include <cstdint>
#include <vector>

namespace mspe {

enum class Padding { Zero, Circular };

struct ConvParams {
  Tensor weight;  // Cout x Cin x kh x kw
  Tensor bias;    // 1 x Cout x 1 x 1
  Padding padding = Padding::Zero;
  int stride = 1;
};

/// He-style initialised conv parameters (leaky-ReLU gain, zero bias).
ConvParams make_conv(int in_channels, int out_channels, int kernel, Padding padding,
                     std::uint64_t seed, std::uint64_t stream, float gain = 1.0f);

/// Cross-correlation with "same" padding of kernel/2 on each side.
Tensor conv2d(const Tensor& x, const ConvParams& p);

/// Nearest-neighbour 2x upsampling followed by a [1,2,1]x[1,2,1]/16 blur.
Tensor upsample2x_blur(const Tensor& x, Padding padding);
/// The normalised 3x3 binomial blur alone.
Tensor blur3x3(const Tensor& x, Padding padding);
/// 2x2 mean pooling.
Tensor avg_pool2(const Tensor& x);

Tensor leaky_relu(const Tensor& x, float slope = 0.2f);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(float s, const Tensor& a) { return scale(a, s); }

/// x + b with b of shape (N or 1) x C x 1 x 1.
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);
/// h + gamma * t, where t is a constant 1 x C x H x W map broadcast over the batch.
Tensor add_scaled(const Tensor& h, const Tensor& gamma, const Tensor& t);
/// h + gamma * PE with the grid broadcast over the batch.
Tensor add_scaled_pe(const Tensor& h, const Tensor& gamma, const PEGrid<float>& pe);
/// h + strength * noise, noise N x 1 x H x W broadcast over channels.
Tensor add_noise(const Tensor& h, const Tensor& strength, const Tensor& noise);

/// Repeats a 1 x C x H x W tensor n times along the batch axis.
Tensor repeat_batch(const Tensor& t, int n);
/// Rows of x picked along the batch axis; repeated indices accumulate gradient.
Tensor gather_batch(const Tensor& x, const std::vector<int>& index);
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Bilinear resize, half-pixel centres. Returns x itself when the size matches.
Tensor resize_bilinear(const Tensor& x, int height, int width);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor mse_loss(const Tensor& a, const Tensor& b);

// Non-differentiable helpers.

/// Circular roll: out[i, j] = x[i - sh, j - sw].
Tensor roll(const Tensor& x, int sh, int sw);
Tensor gaussian(Shape shape, std::uint64_t seed, std::uint64_t stream = 0, float stddev = 1.0f);
/// 1 x C x H x W tensor holding a grid's values.
Tensor to_tensor(const PEGrid<float>& pe);
/// Spatial crop with circular index wrap.
Tensor crop_wrapped(const Tensor& x, int top, int left, int height, int width);

}  // namespace mspe
