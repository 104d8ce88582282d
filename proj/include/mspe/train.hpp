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

// Training loops. The synthesis stack is fitted by latent optimisation: each
// training image owns a learnable latent code and a fixed set of noise maps,
// and codes and weights are optimised jointly under MSE.

#include "mspe/diffusion.hpp"
#include "mspe/generator.hpp"
#include "mspe/optim.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace mspe {

using ProgressFn = std::function<void(int step, float loss)>;

struct GeneratorTrainOptions {
  int steps = 1000;
  int batch = 16;
  float lr = 2e-3f;
  std::uint64_t seed = 0;
  /// Non-empty enables random resizing: each step renders at one of these
  /// heights (width scaled alike) and resizes back before the loss.
  std::vector<int> resize_sizes;
  /// Draw fresh noise maps every step instead of the per-image fixed maps.
  bool resample_noise = false;
};

struct LatentState {
  Tensor codes;               // N x Z x 1 x 1, learnable
  std::vector<Tensor> noise;  // per scale N x 1 x H x W, fixed
};

LatentState make_latent_state(const GeneratorSpec& spec, int n, std::uint64_t seed);

/// Inputs for the given training images.
SynthInputs latent_inputs(const GeneratorSpec& spec, const LatentState& state, const std::vector<int>& index);

/// Returns the per-step losses.
std::vector<float> train_generator(GeneratorSpec& spec, LatentState& state, const Tensor& images,
                                   const GeneratorTrainOptions& opts, const ProgressFn& progress = {});

struct DiffusionTrainOptions {
  int steps = 2000;
  int batch = 32;
  float lr = 2e-3f;
  float clip_norm = 1.0f;
  std::uint64_t seed = 0;
};

/// Returns the per-step losses.
std::vector<float> train_denoiser(Denoiser& model, const Tensor& images, const BetaSchedule& sched,
                                  const DiffusionTrainOptions& opts, const ProgressFn& progress = {});

/// Batch indices for one step, drawn uniformly with replacement.
std::vector<int> sample_batch(int n, int batch, std::uint64_t seed, std::uint64_t step);

}  // namespace mspe
