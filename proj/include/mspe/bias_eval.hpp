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

// Spatial-bias measurements: soft IoU similarity, shift-consistency curves,
// fractional shift of the learned constant and quadrant mass.

#include "mspe/generator.hpp"
#include "mspe/tensor.hpp"

#include <Eigen/Core>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace mspe {

/// clamp(mean_c((x + 1) / 2), 0, 1) of batch item n, as an H x W map.
Eigen::ArrayXXd gray_map(const Tensor& image, int n = 0);

/// Sum of elementwise minima over sum of maxima, after clamping to [0, 1].
/// Two all-zero patches have similarity 1.
template <typename DerivedA, typename DerivedB>
double patch_similarity(const Eigen::ArrayBase<DerivedA>& a, const Eigen::ArrayBase<DerivedB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("patch_similarity: patches differ in shape");
  }
  const auto ca = a.derived().template cast<double>().max(0.0).min(1.0).eval();
  const auto cb = b.derived().template cast<double>().max(0.0).min(1.0).eval();
  const double den = ca.max(cb).sum();
  if (den == 0.0) return 1.0;
  return ca.min(cb).sum() / den;
}

struct ShiftCurve {
  std::vector<double> shifts;
  std::vector<double> similarities;
  std::string mode;
};

struct CropSpec {
  int height = 32;
  int width = 32;
};

/// Vertical shifts in image pixels. Patch A is the crop at the origin of the
/// unshifted image, patch B the crop at round(dh) of the shifted one. The
/// shifted image comes from the shifted pyramid (MsPe), the shifted coarsest
/// grid (SsPe) or the fractionally shifted constant (Baseline). Similarities
/// are averaged over the batch.
ShiftCurve shift_consistency_curve(const GeneratorSpec& spec, const SynthInputs& inputs,
                                   const std::vector<double>& shifts, const CropSpec& crop = {});

/// Generation with the content moved down by dh image pixels in the
/// mode-appropriate way.
Tensor mode_shifted_generate(const GeneratorSpec& spec, const SynthInputs& inputs, double dh);

/// Circular bilinear shift: out(i, j) samples c at (i - dh, j - dw).
Tensor const_fractional_shift(const Tensor& c, double dh, double dw);

/// Fractions of total intensity in (upper-left, upper-right, bottom-left,
/// bottom-right); 0.25 each when the image is all zero.
std::array<double, 4> quadrant_mass(const Eigen::ArrayXXd& intensity);

}  // namespace mspe
