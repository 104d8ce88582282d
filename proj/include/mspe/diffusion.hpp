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

// Toy DDPM: linear schedule, forward process, epsilon-parameterised reverse
// step, training step and stochastic reconstruction.

#include "mspe/denoiser.hpp"
#include "mspe/optim.hpp"
#include "mspe/tensor.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace mspe {

/// Arrays are indexed by t in 1..T; index 0 holds the t = 0 convention
/// (beta 0, alpha_bar 1).
struct BetaSchedule {
  int T = 0;
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;
  std::vector<double> sigmas;
};

BetaSchedule make_beta_schedule(int T, double beta1, double betaT);

/// sqrt(1 - beta_t) x_prev + sqrt(beta_t) noise.
Tensor forward_step(const Tensor& x_prev, int t, const BetaSchedule& sched, const Tensor& noise);
/// sqrt(abar_t) x0 + sqrt(1 - abar_t) noise; t = 0 returns x0.
Tensor q_sample(const Tensor& x0, int t, const BetaSchedule& sched, const Tensor& noise);
/// Per-sample timesteps.
Tensor q_sample(const Tensor& x0, const std::vector<int>& t, const BetaSchedule& sched, const Tensor& noise);

/// Noise prediction for a batch at per-sample timesteps.
using NoisePredictor = std::function<Tensor(const Tensor& x_t, const std::vector<int>& t)>;

NoisePredictor predictor(const Denoiser& model, const PEPyramid<float>* pyramid);

/// One reverse step x_t -> x_{t-1}; no noise is added at t = 1.
Tensor p_sample(const Tensor& x_t, int t, const NoisePredictor& eps, const BetaSchedule& sched,
                const Tensor& noise);

/// Mean squared error between `noise` and the prediction at q_sample(x0, t, noise).
Tensor denoising_loss(const Tensor& x0, const std::vector<int>& t, const Tensor& noise, const NoisePredictor& eps,
                      const BetaSchedule& sched);

/// One Adam update with timesteps and noise drawn from (seed, step).
float train_step(Denoiser& model, const Tensor& x0, const BetaSchedule& sched, Adam& optimizer,
                 const PEPyramid<float>* pyramid, std::uint64_t seed, std::uint64_t step);

/// Encode to t_enc with q_sample, then decode t_enc -> 1 with p_sample.
Tensor stochastic_reconstruct(const Tensor& x0, int t_enc, const NoisePredictor& eps, const BetaSchedule& sched,
                              std::uint64_t seed);

}  // namespace mspe
