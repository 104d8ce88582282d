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
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace mspe {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_input;
};

/// Central finite differences against backward().
///
/// Non-scalar outputs are projected onto a fixed Gaussian direction; the
/// projection is accumulated in double so that outputs untouched by a
/// perturbation cancel exactly. The error per input is the norm-wise
/// relative error ||fd - analytic|| / max(||fd||, ||analytic||).
GradCheckReport gradient_check(const std::function<Tensor()>& forward,
                               const std::vector<std::pair<std::string, Tensor>>& inputs,
                               std::uint64_t seed = 0, double step = 1e-3);

}  // namespace mspe
