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
#include "mspe/dataset.hpp"
#include "mspe/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace mspe {
namespace {

Eigen::ArrayXXd random_patch(int h, int w, Philox& rng) {
  Eigen::ArrayXXd a(h, w);
  for (Eigen::Index k = 0; k < a.size(); ++k) a(k) = 1.4 * rng.uniform() - 0.2;  // exercises clamping
  return a;
}

double oracle_similarity(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b) {
  double num = 0, den = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double x = std::clamp(a(i, j), 0.0, 1.0), y = std::clamp(b(i, j), 0.0, 1.0);
      num += std::min(x, y);
      den += std::max(x, y);
    }
  return den == 0 ? 1.0 : num / den;
}

TEST(Similarity, Examples) {
  Philox rng(1, 0);
  const Eigen::ArrayXXd a = random_patch(7, 9, rng).abs().min(0.98) + 0.01;
  EXPECT_EQ(patch_similarity(a, a), 1.0);
  EXPECT_EQ(patch_similarity(a, Eigen::ArrayXXd::Zero(7, 9)), 0.0);
  EXPECT_EQ(patch_similarity(Eigen::ArrayXXd::Zero(3, 3), Eigen::ArrayXXd::Zero(3, 3)), 1.0);
  EXPECT_EQ(patch_similarity(a, 0.5 * a), 0.5);
  EXPECT_THROW(patch_similarity(a, Eigen::ArrayXXd::Zero(7, 8)), std::invalid_argument);
}

TEST(Similarity, MatchesBruteForceAndIsSymmetric) {
  Philox rng(2, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = 5 + static_cast<int>(rng.below(28)), w = 5 + static_cast<int>(rng.below(28));
    const auto a = random_patch(h, w, rng), b = random_patch(h, w, rng);
    const double s = patch_similarity(a, b);
    EXPECT_NEAR(s, oracle_similarity(a, b), 1e-7);
    EXPECT_EQ(s, patch_similarity(b, a));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    const double t = rng.uniform();
    const Eigen::ArrayXXd pos = a.max(0.0).min(1.0);
    EXPECT_NEAR(patch_similarity(pos, t * pos), t, 1e-12);
  }
}

TEST(GrayMap, ChannelMeanMappedToUnitRange) {
  Tensor img = Tensor::zeros({2, 3, 2, 2});
  img.at(1, 0, 0, 0) = 1.0f;
  img.at(1, 1, 0, 0) = -1.0f;
  img.at(1, 2, 0, 0) = 1.0f;
  img.at(1, 0, 1, 1) = 5.0f;
  img.at(1, 1, 1, 1) = 5.0f;
  img.at(1, 2, 1, 1) = 5.0f;
  const auto g = gray_map(img, 1);
  EXPECT_NEAR(g(0, 0), (1.0 / 3 + 1) / 2, 1e-7);
  EXPECT_EQ(g(0, 1), 0.5);
  EXPECT_EQ(g(1, 1), 1.0);
}

TEST(FractionalShift, IntegerShiftIsRoll) {
  const Tensor c = gaussian({1, 4, 5, 6}, 3, 0);
  EXPECT_EQ((const_fractional_shift(c, 2, -1).data() - roll(c, 2, -1).data()).abs().maxCoeff(), 0.0f);
  EXPECT_EQ((const_fractional_shift(c, 5, 6).data() - c.data()).abs().maxCoeff(), 0.0f);
}

TEST(FractionalShift, HalfShiftOnTwoRowsAveragesRows) {
  Tensor c = Tensor::zeros({1, 1, 2, 3});
  for (int j = 0; j < 3; ++j) {
    c.at(0, 0, 0, j) = static_cast<float>(j);
    c.at(0, 0, 1, j) = 10.0f + j;
  }
  const Tensor s = const_fractional_shift(c, 0.5, 0.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_FLOAT_EQ(s.at(0, 0, i, j), 5.0f + j);
}

TEST(FractionalShift, MatchesFourNeighbourOracle) {
  const Tensor c = gaussian({1, 2, 4, 4}, 4, 0);
  for (auto [dh, dw] : {std::pair{0.25, 0.0}, {0.25, 0.6}, {-1.3, 2.75}}) {
    const Tensor s = const_fractional_shift(c, dh, dw);
    for (int ch = 0; ch < 2; ++ch)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          const double y = i - dh, x = j - dw;
          const double y0 = std::floor(y), x0 = std::floor(x), fy = y - y0, fx = x - x0;
          auto at = [&](double r, double q) {
            const int ri = ((static_cast<int>(r) % 4) + 4) % 4, qi = ((static_cast<int>(q) % 4) + 4) % 4;
            return static_cast<double>(c.at(0, ch, ri, qi));
          };
          const double want = (1 - fy) * (1 - fx) * at(y0, x0) + (1 - fy) * fx * at(y0, x0 + 1) +
                              fy * (1 - fx) * at(y0 + 1, x0) + fy * fx * at(y0 + 1, x0 + 1);
          EXPECT_NEAR(s.at(0, ch, i, j), want, 1e-6);
        }
  }
}

TEST(FractionalShift, ComposesWithIntegerShifts) {
  const Tensor c = gaussian({1, 3, 4, 4}, 5, 0);
  const Tensor direct = const_fractional_shift(c, 1.25, -0.5);
  const Tensor composed = const_fractional_shift(const_fractional_shift(c, 0.25, -0.5), 1.0, 0.0);
  EXPECT_LE((direct.data() - composed.data()).abs().maxCoeff(), 1e-6f);
  // Two fractional steps blur: a quarter shift twice is not a half shift.
  const Tensor twice = const_fractional_shift(const_fractional_shift(c, 0.25, 0.0), 0.25, 0.0);
  EXPECT_GT((twice.data() - const_fractional_shift(c, 0.5, 0.0).data()).abs().maxCoeff(), 1e-3f);
}

TEST(QuadrantMass, Examples) {
  const auto zero = quadrant_mass(Eigen::ArrayXXd::Zero(4, 4));
  for (double q : zero) EXPECT_EQ(q, 0.25);
  Eigen::ArrayXXd one = Eigen::ArrayXXd::Zero(4, 4);
  one(0, 1) = 3.0;
  EXPECT_EQ(quadrant_mass(one), (std::array<double, 4>{1, 0, 0, 0}));
  one(3, 0) = 1.0;
  const auto q = quadrant_mass(one);
  EXPECT_EQ(q[2], 0.25);
  Philox rng(6, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::ArrayXXd img(8, 6);
    for (Eigen::Index k = 0; k < img.size(); ++k) img(k) = rng.uniform();
    const auto m = quadrant_mass(img);
    EXPECT_NEAR(m[0] + m[1] + m[2] + m[3], 1.0, 1e-6);
  }
}

TEST(QuadrantMass, BiasedDatasetIsUpperLeft) {
  const auto set = synth_glyphs(64, 8);
  Eigen::ArrayXXd total = Eigen::ArrayXXd::Zero(64, 64);
  for (int n = 0; n < 64; ++n) total += (gray_map(set.images, n) - 0.0).max(0.0);
  EXPECT_GT(quadrant_mass(total)[0], 0.9);
}

GeneratorSpec toy(GenMode mode) {
  GeneratorConfig cfg;
  cfg.mode = mode;
  cfg.channels = {8, 8, 8, 8, 8};  // 64 x 64 output
  cfg.latent_dim = 4;
  cfg.padding = Padding::Circular;
  cfg.seed = 2;
  return make_generator(cfg);
}

TEST(ShiftCurve, ZeroAndFullPeriod) {
  for (GenMode mode : {GenMode::Baseline, GenMode::SsPe, GenMode::MsPe}) {
    const auto spec = toy(mode);
    const auto in = make_inputs(spec, sample_latents(spec, 2, 1));
    const auto curve = shift_consistency_curve(spec, in, {0.0, 3.0});
    EXPECT_EQ(curve.mode, to_string(mode));
    ASSERT_EQ(curve.similarities.size(), 2u);
    EXPECT_EQ(curve.similarities[0], 1.0);
    EXPECT_GE(curve.similarities[1], 0.0);
    EXPECT_LE(curve.similarities[1], 1.0);
  }
  const auto ms = toy(GenMode::MsPe);
  const auto in = make_inputs(ms, sample_latents(ms, 2, 1));
  EXPECT_EQ(shift_consistency_curve(ms, in, {64.0}).similarities[0], 1.0);
}

TEST(ShiftCurve, LatticeShiftsAreExactUnderCircularPadding) {
  // A 16-pixel image shift is one pixel at the coarsest of five scales.
  for (GenMode mode : {GenMode::Baseline, GenMode::MsPe}) {
    const auto spec = toy(mode);
    const auto in = make_inputs(spec, sample_latents(spec, 1, 3));
    EXPECT_NEAR(shift_consistency_curve(spec, in, {16.0, 32.0}).similarities[1], 1.0, 1e-6);
  }
}

TEST(ShiftCurve, ModeShiftedGenerateAtZeroIsIdentity) {
  for (GenMode mode : {GenMode::Baseline, GenMode::SsPe, GenMode::MsPe}) {
    const auto spec = toy(mode);
    const auto in = make_inputs(spec, sample_latents(spec, 1, 3));
    EXPECT_EQ((mode_shifted_generate(spec, in, 0.0).data() - synth_forward(spec, in).data()).abs().maxCoeff(),
              0.0f);
  }
}

}  // namespace
}  // namespace mspe
