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

#include "mspe/diffusion.hpp"

#include "mspe/random.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mspe {
namespace {

void require_t(int t, const BetaSchedule& sched, int lo = 1) {
  if (t < lo || t > sched.T) {
    throw std::invalid_argument("timestep " + std::to_string(t) + " outside [" + std::to_string(lo) + ", " +
                                std::to_string(sched.T) + "]");
  }
}

void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(what) + ": " + a.shape().str() + " vs " + b.shape().str());
  }
}

}  // namespace

BetaSchedule make_beta_schedule(int T, double beta1, double betaT) {
  if (T < 1) throw std::invalid_argument("beta schedule needs T >= 1");
  if (!(beta1 > 0.0 && beta1 <= betaT && betaT < 1.0)) {
    throw std::invalid_argument("beta schedule needs 0 < beta1 <= betaT < 1");
  }
  BetaSchedule s;
  s.T = T;
  s.betas.assign(T + 1, 0.0);
  s.alphas.assign(T + 1, 1.0);
  s.alpha_bars.assign(T + 1, 1.0);
  s.sigmas.assign(T + 1, 0.0);
  for (int t = 1; t <= T; ++t) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / (T - 1);
    s.betas[t] = beta1 + (betaT - beta1) * frac;
    s.alphas[t] = 1.0 - s.betas[t];
    s.alpha_bars[t] = s.alpha_bars[t - 1] * s.alphas[t];
    s.sigmas[t] = std::sqrt(s.betas[t]);
  }
  return s;
}

Tensor forward_step(const Tensor& x_prev, int t, const BetaSchedule& sched, const Tensor& noise) {
  require_t(t, sched);
  require_same(x_prev, noise, "forward_step");
  const double b = sched.betas[t];
  return Tensor::from_array(x_prev.shape(), (std::sqrt(1.0 - b) * x_prev.data().cast<double>() +
                                             std::sqrt(b) * noise.data().cast<double>())
                                                .cast<float>());
}

Tensor q_sample(const Tensor& x0, int t, const BetaSchedule& sched, const Tensor& noise) {
  return q_sample(x0, std::vector<int>(x0.shape().n, t), sched, noise);
}

Tensor q_sample(const Tensor& x0, const std::vector<int>& t, const BetaSchedule& sched, const Tensor& noise) {
  require_same(x0, noise, "q_sample");
  const Shape s = x0.shape();
  if (static_cast<int>(t.size()) != s.n) throw std::invalid_argument("q_sample: need one timestep per sample");
  const std::int64_t per = s.c * s.plane();
  Eigen::ArrayXf out(x0.numel());
  for (int n = 0; n < s.n; ++n) {
    require_t(t[n], sched, 0);
    const double ab = sched.alpha_bars[t[n]];
    out.segment(n * per, per) = (std::sqrt(ab) * x0.data().segment(n * per, per).cast<double>() +
                                 std::sqrt(1.0 - ab) * noise.data().segment(n * per, per).cast<double>())
                                    .cast<float>();
  }
  return Tensor::from_array(s, std::move(out));
}

NoisePredictor predictor(const Denoiser& model, const PEPyramid<float>* pyramid) {
  return [&model, pyramid](const Tensor& x_t, const std::vector<int>& t) {
    return denoiser_forward(model, x_t, t, pyramid);
  };
}

Tensor p_sample(const Tensor& x_t, int t, const NoisePredictor& eps, const BetaSchedule& sched, const Tensor& noise) {
  require_t(t, sched);
  const Tensor e = eps(x_t, std::vector<int>(x_t.shape().n, t));
  require_same(x_t, e, "p_sample prediction");
  const double a = sched.alphas[t], b = sched.betas[t], ab = sched.alpha_bars[t];
  Eigen::ArrayXd mu = (x_t.data().cast<double>() - (b / std::sqrt(1.0 - ab)) * e.data().cast<double>()) / std::sqrt(a);
  if (t > 1) {
    require_same(x_t, noise, "p_sample noise");
    mu += sched.sigmas[t] * noise.data().cast<double>();
  }
  return Tensor::from_array(x_t.shape(), mu.cast<float>());
}

Tensor denoising_loss(const Tensor& x0, const std::vector<int>& t, const Tensor& noise, const NoisePredictor& eps,
                      const BetaSchedule& sched) {
  for (int ti : t) require_t(ti, sched);
  return mse_loss(eps(q_sample(x0, t, sched, noise), t), noise);
}

float train_step(Denoiser& model, const Tensor& x0, const BetaSchedule& sched, Adam& optimizer,
                 const PEPyramid<float>* pyramid, std::uint64_t seed, std::uint64_t step) {
  Philox rng(seed, 2 * step);
  std::vector<int> t(x0.shape().n);
  for (int& ti : t) ti = 1 + static_cast<int>(rng.below(static_cast<std::uint32_t>(sched.T)));
  const Tensor noise = gaussian(x0.shape(), seed, 2 * step + 1);
  optimizer.zero_grad();
  const Tensor loss = denoising_loss(x0, t, noise, predictor(model, pyramid), sched);
  check_finite(loss, "denoising loss");
  backward(loss);
  optimizer.step();
  return loss.item();
}

Tensor stochastic_reconstruct(const Tensor& x0, int t_enc, const NoisePredictor& eps, const BetaSchedule& sched,
                              std::uint64_t seed) {
  require_t(t_enc, sched);
  Tensor x = q_sample(x0, t_enc, sched, gaussian(x0.shape(), seed, 0));
  for (int t = t_enc; t >= 1; --t) {
    x = p_sample(x, t, eps, sched, t > 1 ? gaussian(x0.shape(), seed, static_cast<std::uint64_t>(t)) : Tensor());
  }
  return x;
}

}  // namespace mspe
