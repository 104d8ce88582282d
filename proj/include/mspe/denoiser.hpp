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

// Small encoder-decoder noise predictor for the toy diffusion model.
//
// Resolutions run from `size` down by 2x per entry of `channels` (finest
// first). Every residual block receives a bias from the sinusoidal code of
// the timestep. With use_pe, gamma * PE is added after each downsampling-path
// block and after each upsampling-path block.

#include "mspe/ops.hpp"
#include "mspe/pe.hpp"
#include "mspe/tensor.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mspe {

struct DenoiserConfig {
  int size = 32;
  int image_channels = 1;
  std::vector<int> channels{16, 32, 32};
  int time_dim = 32;
  int time_hidden = 64;
  int steps = 200;  // valid timesteps are 1..steps
  bool use_pe = true;
  Padding padding = Padding::Zero;
  float gamma_init = 1.0f;
  std::uint64_t seed = 0;

  int levels() const { return static_cast<int>(channels.size()); }
  void validate() const;
};

struct ResBlock {
  ConvParams conv1, conv2, skip;  // skip undefined when channels match
  ConvParams time_proj;           // 1x1, time_hidden -> out channels
};

struct Denoiser {
  DenoiserConfig config;
  ConvParams conv_in, conv_out, time_mlp;
  std::vector<ResBlock> down;  // one per resolution, finest first
  std::vector<ResBlock> up;    // one per resolution except the coarsest
  std::vector<Tensor> gamma_down, gamma_up;

  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::vector<Tensor> parameters() const;
};

Denoiser make_denoiser(const DenoiserConfig& config);

/// The pyramid a denoiser expects: coarsest first, one level per resolution.
PEPyramid<float> denoiser_pyramid(const DenoiserConfig& config);

/// Predicted noise for x_t at per-sample timesteps t. `pyramid` may be null
/// for configurations without PE; a shifted pyramid requests generation at a
/// translated position.
Tensor denoiser_forward(const Denoiser& model, const Tensor& x_t, const std::vector<int>& t,
                        const PEPyramid<float>* pyramid);

}  // namespace mspe
