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

#include "mspe/optim.hpp"

#include <cmath>

namespace mspe {

void adam_step(std::vector<Tensor>& params, OptimizerState& state, const AdamOptions& opts) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Eigen::ArrayXf::Zero(p.numel()));
      state.v.push_back(Eigen::ArrayXf::Zero(p.numel()));
    }
  }
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("optimizer state does not match the parameter list");
  }
  double scale = 1.0;
  if (opts.clip_norm > 0.0f) {
    double sq = 0.0;
    for (const auto& p : params) {
      if (p.has_grad()) sq += p.grad().cast<double>().square().sum();
    }
    const double norm = std::sqrt(sq);
    if (norm > opts.clip_norm) scale = opts.clip_norm / norm;
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(static_cast<double>(opts.beta1), static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(static_cast<double>(opts.beta2), static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    if (state.m[i].size() != p.numel()) {
      throw std::invalid_argument("optimizer accumulator shape mismatch for parameter " + std::to_string(i));
    }
    const Eigen::ArrayXf g = p.has_grad() ? Eigen::ArrayXf(p.grad() * static_cast<float>(scale)) : Eigen::ArrayXf::Zero(p.numel());
    state.m[i] = opts.beta1 * state.m[i] + (1.0f - opts.beta1) * g;
    state.v[i] = opts.beta2 * state.v[i] + (1.0f - opts.beta2) * g.square();
    const Eigen::ArrayXf m_hat = state.m[i] / static_cast<float>(bc1);
    const Eigen::ArrayXf v_hat = state.v[i] / static_cast<float>(bc2);
    p.data() -= opts.lr * m_hat / (v_hat.sqrt() + opts.eps);
  }
}

}  // namespace mspe
