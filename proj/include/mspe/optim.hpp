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

#include "mspe/tensor.hpp"

#include <cstdint>
#include <vector>

namespace mspe {

struct AdamOptions {
  float lr = 2e-3f;
  float beta1 = 0.0f;
  float beta2 = 0.99f;
  float eps = 1e-8f;
  float clip_norm = 0.0f;  // global gradient-norm limit; 0 disables
};

/// Moment accumulators, one per parameter, in parameter order.
struct OptimizerState {
  std::int64_t step = 0;
  std::vector<Eigen::ArrayXf> m;
  std::vector<Eigen::ArrayXf> v;
};

/// One bias-corrected Adam update from the gradients currently held by
/// `params`. Parameters without a gradient count as zero-gradient.
void adam_step(std::vector<Tensor>& params, OptimizerState& state, const AdamOptions& opts);

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {}

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }
  void step() { adam_step(params_, state_, opts_); }

  AdamOptions& options() { return opts_; }
  const OptimizerState& state() const { return state_; }
  OptimizerState& state() { return state_; }

 private:
  std::vector<Tensor> params_;
  AdamOptions opts_;
  OptimizerState state_;
};

}  // namespace mspe
