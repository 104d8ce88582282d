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

#include "mspe/gradcheck.hpp"

#include "mspe/ops.hpp"

#include <cmath>

namespace mspe {

GradCheckReport gradient_check(const std::function<Tensor()>& forward,
                               const std::vector<std::pair<std::string, Tensor>>& inputs, std::uint64_t seed,
                               double step) {
  const Tensor probe = forward();
  const bool scalar_out = probe.numel() == 1;
  const Tensor direction = scalar_out ? Tensor::scalar(1.0f) : gaussian(probe.shape(), seed, 0xFDC);

  auto project = [&](const Tensor& out) {
    return (out.data().cast<double>() * direction.data().cast<double>()).sum();
  };

  for (const auto& [name, t] : inputs) {
    Tensor(t).zero_grad();
  }
  backward(scalar_out ? forward() : sum(mul(forward(), direction)));

  GradCheckReport report;
  for (const auto& [name, input] : inputs) {
    Tensor t = input;
    const Eigen::ArrayXd analytic = t.grad().cast<double>();
    Eigen::ArrayXd numeric(t.numel());
    for (Eigen::Index e = 0; e < t.numel(); ++e) {
      const float v = t.data()[e];
      const float plus = static_cast<float>(v + step);
      const float minus = static_cast<float>(v - step);
      t.data()[e] = plus;
      const double fp = project(forward());
      t.data()[e] = minus;
      const double fm = project(forward());
      t.data()[e] = v;
      numeric[e] = (fp - fm) / (static_cast<double>(plus) - static_cast<double>(minus));
    }
    const double scale = std::max({analytic.matrix().norm(), numeric.matrix().norm(), 1e-12});
    const double err = (analytic - numeric).matrix().norm() / scale;
    if (err >= report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_input = name;
    }
  }
  return report;
}

}  // namespace mspe
