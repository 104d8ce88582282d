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
#include "mspe/optim.hpp"
#include "mspe/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace mspe {
namespace {

DenoiserConfig tiny_config(bool use_pe) {
  DenoiserConfig cfg;
  cfg.size = 16;
  cfg.channels = {4, 8, 8};
  cfg.time_dim = 8;
  cfg.time_hidden = 8;
  cfg.steps = 20;
  cfg.use_pe = use_pe;
  cfg.seed = 3;
  return cfg;
}

float max_diff(const Tensor& a, const Tensor& b) {
  EXPECT_EQ(a.shape(), b.shape());
  return (a.data() - b.data()).abs().maxCoeff();
}

TEST(Schedule, Invariants) {
  const auto s = make_beta_schedule(200, 1e-3, 0.05);
  EXPECT_EQ(s.betas[0], 0.0);
  EXPECT_EQ(s.alpha_bars[0], 1.0);
  EXPECT_EQ(s.betas[1], 1e-3);
  EXPECT_EQ(s.betas[200], 0.05);
  double prod = 1.0;
  for (int t = 1; t <= 200; ++t) {
    EXPECT_EQ(s.alphas[t], 1.0 - s.betas[t]);
    prod *= s.alphas[t];
    EXPECT_EQ(s.alpha_bars[t], prod);
    EXPECT_LT(s.alpha_bars[t], s.alpha_bars[t - 1]);
    if (t > 1) {
      EXPECT_GE(s.betas[t], s.betas[t - 1]);
    }
    EXPECT_EQ(s.sigmas[t], std::sqrt(s.betas[t]));
  }
  EXPECT_EQ(make_beta_schedule(1, 0.02, 0.02).betas[1], 0.02);
  EXPECT_THROW(make_beta_schedule(0, 1e-3, 0.02), std::invalid_argument);
  EXPECT_THROW(make_beta_schedule(10, 0.05, 0.01), std::invalid_argument);
  EXPECT_THROW(make_beta_schedule(10, 0.0, 0.01), std::invalid_argument);
  EXPECT_THROW(make_beta_schedule(10, 0.01, 1.0), std::invalid_argument);
}

TEST(QSample, EdgeCases) {
  const auto s = make_beta_schedule(10, 1e-3, 0.2);
  const Tensor x0 = gaussian({2, 1, 4, 4}, 1, 0);
  const Tensor z = gaussian({2, 1, 4, 4}, 1, 1);
  EXPECT_EQ(max_diff(q_sample(x0, 0, s, z), x0), 0.0f);
  EXPECT_THROW(q_sample(x0, 11, s, z), std::invalid_argument);
  EXPECT_THROW(q_sample(x0, std::vector<int>{1}, s, z), std::invalid_argument);
  // Per-sample timesteps treat each row independently.
  const Tensor mixed = q_sample(x0, std::vector<int>{0, 10}, s, z);
  const Tensor all10 = q_sample(x0, 10, s, z);
  for (int k = 0; k < 16; ++k) {
    EXPECT_EQ(mixed.data()[k], x0.data()[k]);
    EXPECT_EQ(mixed.data()[16 + k], all10.data()[16 + k]);
  }
}

TEST(QSample, IteratedForwardStepsMatchMoments) {
  const auto s = make_beta_schedule(50, 1e-3, 0.05);
  const int n = 10000, t = 30;
  const float x0v = 0.7f;
  Tensor x = Tensor::from_array({n, 1, 1, 1}, Eigen::ArrayXf::Constant(n, x0v));
  for (int k = 1; k <= t; ++k) x = forward_step(x, k, s, gaussian(x.shape(), 8, k));
  const Eigen::ArrayXd v = x.data().cast<double>();
  const double mean = v.mean();
  const double var = (v - mean).square().sum() / (n - 1);
  const double want_mean = std::sqrt(s.alpha_bars[t]) * x0v;
  const double want_var = 1.0 - s.alpha_bars[t];
  EXPECT_LE(std::fabs(mean - want_mean), 3.0 * std::sqrt(want_var / n));
  EXPECT_LE(std::fabs(var - want_var), 3.0 * want_var * std::sqrt(2.0 / (n - 1)));
}

TEST(PSample, MatchesScalarClosedForm) {
  const auto s = make_beta_schedule(20, 1e-3, 0.1);
  const Tensor xt = gaussian({1, 1, 3, 3}, 2, 0);
  const Tensor noise = gaussian({1, 1, 3, 3}, 2, 1);
  const Tensor pred = gaussian({1, 1, 3, 3}, 2, 2);
  const NoisePredictor eps = [&](const Tensor&, const std::vector<int>&) { return pred; };
  for (int t : {1, 2, 11, 20}) {
    const Tensor out = p_sample(xt, t, eps, s, noise);
    for (int k = 0; k < 9; ++k) {
      const double a = s.alphas[t], b = s.betas[t], ab = s.alpha_bars[t];
      double want = (xt.data()[k] - b / std::sqrt(1 - ab) * pred.data()[k]) / std::sqrt(a);
      if (t > 1) want += std::sqrt(b) * noise.data()[k];
      EXPECT_NEAR(out.data()[k], want, 1e-6);
    }
  }
  EXPECT_NO_THROW(p_sample(xt, 1, eps, s, Tensor()));
  EXPECT_THROW(p_sample(xt, 0, eps, s, noise), std::invalid_argument);
}

TEST(PSample, PerfectPredictorRecoversCleanImageFromStepOne) {
  const auto s = make_beta_schedule(10, 1e-2, 0.2);
  const Tensor x0 = gaussian({1, 1, 4, 4}, 3, 0);
  const Tensor z = gaussian({1, 1, 4, 4}, 3, 1);
  const NoisePredictor eps = [&](const Tensor&, const std::vector<int>&) { return z; };
  EXPECT_LE(max_diff(p_sample(q_sample(x0, 1, s, z), 1, eps, s, Tensor()), x0), 1e-6f);
}

TEST(Denoiser, OutputShapeAndZeroInitialOutput) {
  const auto model = make_denoiser(tiny_config(true));
  const auto pyr = denoiser_pyramid(model.config);
  EXPECT_EQ(pyr.num_levels(), 3);
  EXPECT_EQ(pyr.levels.back().height, 16);
  EXPECT_EQ(pyr.levels.front().channels, 8);
  const Tensor x = gaussian({2, 1, 16, 16}, 4, 0);
  const Tensor y = denoiser_forward(model, x, {1, 20}, &pyr);
  EXPECT_EQ(y.shape(), x.shape());
  // The output projection starts at zero weight.
  EXPECT_EQ(y.data().abs().maxCoeff(), 0.0f);
}

TEST(Denoiser, InputValidation) {
  const auto model = make_denoiser(tiny_config(true));
  const auto pyr = denoiser_pyramid(model.config);
  const Tensor x = gaussian({2, 1, 16, 16}, 4, 0);
  EXPECT_THROW(denoiser_forward(model, x, {0, 1}, &pyr), std::invalid_argument);
  EXPECT_THROW(denoiser_forward(model, x, {1, 21}, &pyr), std::invalid_argument);
  EXPECT_THROW(denoiser_forward(model, x, {1}, &pyr), std::invalid_argument);
  EXPECT_THROW(denoiser_forward(model, x, {1, 1}, nullptr), std::invalid_argument);
  auto bad = tiny_config(true);
  bad.size = 18;
  EXPECT_THROW(make_denoiser(bad), std::invalid_argument);
}

TEST(Denoiser, PositionalCodeAndGammaMatter) {
  auto model = make_denoiser(tiny_config(true));
  model.conv_out.weight.data() = gaussian(model.conv_out.weight.shape(), 5, 0, 0.3f).data();
  const auto pyr = denoiser_pyramid(model.config);
  const Tensor x = gaussian({1, 1, 16, 16}, 6, 0);
  const Tensor base = denoiser_forward(model, x, {5}, &pyr);
  const auto shifted = shift_pyramid(pyr, 8.0, 0.0, WrapMode::Circular);
  EXPECT_GT(max_diff(denoiser_forward(model, x, {5}, &shifted), base), 1e-3f);
  EXPECT_GT(max_diff(denoiser_forward(model, x, {6}, &pyr), base), 1e-6f);

  // With every gamma at zero the pyramid has no influence.
  for (auto& g : model.gamma_down) g.data().setZero();
  for (auto& g : model.gamma_up) g.data().setZero();
  EXPECT_EQ(max_diff(denoiser_forward(model, x, {5}, &shifted), denoiser_forward(model, x, {5}, &pyr)), 0.0f);
}

TEST(Denoiser, BaselineHasNoGamma) {
  const auto model = make_denoiser(tiny_config(false));
  EXPECT_TRUE(model.gamma_down.empty());
  EXPECT_TRUE(model.gamma_up.empty());
  const Tensor x = gaussian({1, 1, 16, 16}, 6, 0);
  EXPECT_EQ(denoiser_forward(model, x, {3}, nullptr).shape(), x.shape());
  for (const auto& [name, t] : model.named_parameters()) EXPECT_EQ(name.find("gamma"), std::string::npos);
}

TEST(Denoiser, EveryParameterReceivesGradient) {
  auto model = make_denoiser(tiny_config(true));
  model.conv_out.weight.data() = gaussian(model.conv_out.weight.shape(), 5, 0, 0.3f).data();
  const auto pyr = denoiser_pyramid(model.config);
  const auto s = make_beta_schedule(20, 1e-3, 0.1);
  const Tensor x0 = gaussian({2, 1, 16, 16}, 7, 0);
  backward(denoising_loss(x0, {3, 17}, gaussian(x0.shape(), 7, 1), predictor(model, &pyr), s));
  for (const auto& [name, t] : model.named_parameters()) {
    EXPECT_GT(t.grad().abs().maxCoeff(), 0.0f) << name;
  }
}

TEST(Training, LossDecreasesAndIsDeterministic) {
  const auto s = make_beta_schedule(20, 1e-3, 0.1);
  Tensor x0 = Tensor::from_array({4, 1, 16, 16}, Eigen::ArrayXf::Constant(4 * 256, -1.0f));
  for (int n = 0; n < 4; ++n)
    for (int i = 2; i < 8; ++i)
      for (int j = 2; j < 8; ++j) x0.at(n, 0, i, j) = 1.0f;
  auto run = [&] {
    auto model = make_denoiser(tiny_config(true));
    const auto pyr = denoiser_pyramid(model.config);
    Adam opt(model.parameters(), {.lr = 3e-3f});
    std::vector<float> losses;
    for (int step = 0; step < 60; ++step) losses.push_back(train_step(model, x0, s, opt, &pyr, 11, step));
    return losses;
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a, b);
  double head = 0, tail = 0;
  for (int k = 0; k < 10; ++k) {
    head += a[k];
    tail += a[50 + k];
  }
  EXPECT_LT(tail, 0.8 * head);
}

TEST(Reconstruct, DeterministicAndShapePreserving) {
  const auto model = make_denoiser(tiny_config(true));
  const auto pyr = denoiser_pyramid(model.config);
  const auto s = make_beta_schedule(20, 1e-3, 0.1);
  const Tensor x0 = gaussian({2, 1, 16, 16}, 9, 0);
  const Tensor a = stochastic_reconstruct(x0, 10, predictor(model, &pyr), s, 4);
  const Tensor b = stochastic_reconstruct(x0, 10, predictor(model, &pyr), s, 4);
  EXPECT_EQ(a.shape(), x0.shape());
  EXPECT_EQ(max_diff(a, b), 0.0f);
  EXPECT_GT(max_diff(a, stochastic_reconstruct(x0, 10, predictor(model, &pyr), s, 5)), 0.0f);
  EXPECT_THROW(stochastic_reconstruct(x0, 0, predictor(model, &pyr), s, 4), std::invalid_argument);
}

}  // namespace
}  // namespace mspe
