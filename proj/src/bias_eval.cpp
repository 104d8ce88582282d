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

#include "mspe/bias_eval.hpp"

#include <cmath>

namespace mspe {

Eigen::ArrayXXd gray_map(const Tensor& image, int n) {
  const Shape s = image.shape();
  if (n < 0 || n >= s.n) throw std::invalid_argument("gray_map: batch index out of range");
  Eigen::ArrayXXd g = Eigen::ArrayXXd::Zero(s.h, s.w);
  for (int c = 0; c < s.c; ++c)
    for (int i = 0; i < s.h; ++i)
      for (int j = 0; j < s.w; ++j) g(i, j) += (image.at(n, c, i, j) + 1.0) * 0.5;
  return (g / s.c).max(0.0).min(1.0);
}

Tensor mode_shifted_generate(const GeneratorSpec& spec, const SynthInputs& inputs, double dh) {
  const int L = spec.config.levels();
  const double coarse = std::ldexp(dh, 1 - L);
  switch (spec.config.mode) {
    case GenMode::MsPe:
      return shifted_generate(spec, inputs, dh, 0.0);
    case GenMode::SsPe: {
      SynthInputs in = inputs;
      in.pyramid->levels[0] = shift_grid(inputs.pyramid->levels[0], coarse, 0.0, WrapMode::Circular);
      return synth_forward(spec, in);
    }
    case GenMode::Baseline: {
      SynthInputs in = inputs;
      in.constant = const_fractional_shift(inputs.constant.defined() ? inputs.constant : spec.constant, coarse, 0.0);
      return synth_forward(spec, in);
    }
  }
  throw std::logic_error("unreachable");
}

ShiftCurve shift_consistency_curve(const GeneratorSpec& spec, const SynthInputs& inputs,
                                   const std::vector<double>& shifts, const CropSpec& crop) {
  ShiftCurve curve;
  curve.mode = to_string(spec.config.mode);
  const Tensor base = synth_forward(spec, inputs);
  const int n = base.shape().n;
  const Tensor patch_a = crop_wrapped(base, 0, 0, crop.height, crop.width);
  for (double dh : shifts) {
    const Tensor shifted = mode_shifted_generate(spec, inputs, dh);
    const Tensor patch_b = crop_wrapped(shifted, static_cast<int>(std::lround(dh)), 0, crop.height, crop.width);
    double acc = 0.0;
    for (int k = 0; k < n; ++k) acc += patch_similarity(gray_map(patch_a, k), gray_map(patch_b, k));
    curve.shifts.push_back(dh);
    curve.similarities.push_back(acc / n);
  }
  return curve;
}

Tensor const_fractional_shift(const Tensor& c, double dh, double dw) {
  const Shape s = c.shape();
  if (!std::isfinite(dh) || !std::isfinite(dw)) throw std::invalid_argument("const_fractional_shift: non-finite shift");
  auto taps = [](double d, int n, int i, int& i0, int& i1, double& t) {
    const double src = i - d;
    const double f = std::floor(src);
    t = src - f;
    const long long base = static_cast<long long>(f);
    i0 = static_cast<int>(((base % n) + n) % n);
    i1 = (i0 + 1) % n;
  };
  Tensor out = Tensor::zeros(s);
  for (int n = 0; n < s.n; ++n)
    for (int ch = 0; ch < s.c; ++ch)
      for (int i = 0; i < s.h; ++i) {
        int r0, r1;
        double tr;
        taps(dh, s.h, i, r0, r1, tr);
        for (int j = 0; j < s.w; ++j) {
          int c0, c1;
          double tc;
          taps(dw, s.w, j, c0, c1, tc);
          const double v = (1 - tr) * ((1 - tc) * c.at(n, ch, r0, c0) + tc * c.at(n, ch, r0, c1)) +
                           tr * ((1 - tc) * c.at(n, ch, r1, c0) + tc * c.at(n, ch, r1, c1));
          out.at(n, ch, i, j) = static_cast<float>(v);
        }
      }
  return out;
}

std::array<double, 4> quadrant_mass(const Eigen::ArrayXXd& intensity) {
  const Eigen::Index h = intensity.rows(), w = intensity.cols();
  const Eigen::Index hh = h / 2, hw = w / 2;
  const Eigen::ArrayXXd v = intensity.max(0.0);
  std::array<double, 4> q{v.topLeftCorner(hh, hw).sum(), v.topRightCorner(hh, w - hw).sum(),
                          v.bottomLeftCorner(h - hh, hw).sum(), v.bottomRightCorner(h - hh, w - hw).sum()};
  const double total = q[0] + q[1] + q[2] + q[3];
  if (total <= 0.0) return {0.25, 0.25, 0.25, 0.25};
  for (double& x : q) x /= total;
  return q;
}

}  // namespace mspe
