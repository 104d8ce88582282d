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

#include "mspe/pe.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace mspe {
namespace {

// Independent evaluation of the embedding, one element at a time, in long
// double. Shares no code with the library.
long double oracle_value(int c, long double i, long double j, int channels) {
  const int d = channels / 4;
  const bool row_half = c < 2 * d;
  const int local = row_half ? c : c - 2 * d;
  const int k = local / 2;
  const long double coord = row_half ? i : j;
  const long double arg = coord / std::pow(10000.0L, static_cast<long double>(k) / (2.0L * d));
  return local % 2 == 0 ? std::sin(arg) : std::cos(arg);
}

double max_oracle_error(const PEGrid<float>& g) {
  double worst = 0.0;
  for (int c = 0; c < g.channels; ++c) {
    for (int i = 0; i < g.height; ++i) {
      for (int j = 0; j < g.width; ++j) {
        const long double want = oracle_value(c, g.row_coords[i], g.col_coords[j], g.channels);
        worst = std::max(worst, static_cast<double>(std::fabs(g.at(c, i, j) - want)));
      }
    }
  }
  return worst;
}

double max_abs_diff(const PEGrid<float>& a, const PEGrid<float>& b) {
  EXPECT_EQ(a.data.size(), b.data.size());
  return (a.data - b.data).abs().maxCoeff();
}

TEST(EncodeAxis, Origin) {
  const auto v = encode_axis<double>(0.0, 1);
  ASSERT_EQ(v.size(), 2);
  EXPECT_EQ(v[0], 0.0);
  EXPECT_EQ(v[1], 1.0);
}

TEST(EncodeAxis, UnitCoordinate) {
  const auto v = encode_axis<double>(1.0, 1);
  EXPECT_NEAR(v[0], 0.841471, 1e-6);
  EXPECT_NEAR(v[1], 0.540302, 1e-6);
}

TEST(EncodeAxis, SecondFrequencyUsesFourthRoot) {
  // 10000^(1/4) = 10, so element 2 is sin(5 / 10).
  const auto v = encode_axis<double>(5.0, 2);
  EXPECT_NEAR(v[2], 0.479426, 1e-6);
}

TEST(EncodeAxis, RejectsNonFinite) {
  EXPECT_THROW(encode_axis<float>(std::nan(""), 2), std::invalid_argument);
  EXPECT_THROW(encode_axis<float>(INFINITY, 2), std::invalid_argument);
  EXPECT_THROW(encode_axis<float>(1.0, 0), std::invalid_argument);
}

TEST(EncodePosition, Examples) {
  const auto a = encode_position<double>(0, 0, 4);
  EXPECT_EQ((std::vector<double>(a.begin(), a.end())), (std::vector<double>{0, 1, 0, 1}));
  const auto b = encode_position<double>(0, 0, 8);
  EXPECT_EQ((std::vector<double>(b.begin(), b.end())), (std::vector<double>{0, 1, 0, 1, 0, 1, 0, 1}));
  const auto c = encode_position<double>(1, 0, 4);
  EXPECT_NEAR(c[0], 0.841471, 1e-6);
  EXPECT_NEAR(c[1], 0.540302, 1e-6);
  EXPECT_EQ(c[2], 0.0);
  EXPECT_EQ(c[3], 1.0);
}

TEST(EncodePosition, ChannelsMustBeMultipleOfFour) {
  EXPECT_THROW(encode_position<float>(0, 0, 6), std::invalid_argument);
  EXPECT_THROW(encode_position<float>(0, 0, 0), std::invalid_argument);
  EXPECT_THROW(build_grid<float>(4, 4, 6), std::invalid_argument);
}

TEST(BuildGrid, SinglePixel) {
  const auto g = build_grid<float>(1, 1, 4);
  EXPECT_EQ(g.at(0, 0, 0), 0.0f);
  EXPECT_EQ(g.at(1, 0, 0), 1.0f);
  EXPECT_EQ(g.at(2, 0, 0), 0.0f);
  EXPECT_EQ(g.at(3, 0, 0), 1.0f);
}

TEST(BuildGrid, MatchesOracle) {
  for (int hw : {4, 8, 64}) {
    for (int c : {4, 64}) {
      const auto g = build_grid<float>(hw, hw, c);
      EXPECT_LE(max_oracle_error(g), 1e-6) << hw << "x" << hw << "x" << c;
    }
  }
}

TEST(BuildGrid, RectangularIndexing) {
  const auto g = build_grid<float>(2, 3, 4);
  EXPECT_NEAR(g.at(0, 1, 0), 0.8414710, 1e-6);  // sin(row 1)
  EXPECT_NEAR(g.at(2, 0, 2), 0.9092974, 1e-6);  // sin(col 2)
  EXPECT_EQ(g.row_coords, (std::vector<double>{0, 1}));
  EXPECT_EQ(g.col_coords, (std::vector<double>{0, 1, 2}));
}

TEST(ShiftGrid, IdentityAndFullPeriod) {
  const auto g = build_grid<float>(8, 8, 16);
  EXPECT_EQ(max_abs_diff(shift_grid(g, 0, 0, WrapMode::Circular), g), 0.0);
  EXPECT_EQ(max_abs_diff(shift_grid(g, 8, 0, WrapMode::Circular), g), 0.0);
  EXPECT_EQ(max_abs_diff(shift_grid(g, -16, 24, WrapMode::Circular), g), 0.0);
}

TEST(ShiftGrid, FractionalCircular) {
  const int H = 8, C = 16;
  const auto g = build_grid<float>(H, 6, C);
  const auto s = shift_grid(g, 0.5, 0, WrapMode::Circular);
  double worst = 0;
  for (int i = 0; i < H; ++i) {
    const double ci = std::fmod(i - 0.5 + H, static_cast<double>(H));
    for (int j = 0; j < 6; ++j) {
      for (int c = 0; c < C; ++c) worst = std::max(worst, std::fabs(s.at(c, i, j) - static_cast<double>(oracle_value(c, ci, j, C))));
    }
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(ShiftGrid, OpenModeDoesNotWrap) {
  const auto g = build_grid<float>(4, 4, 4);
  const auto s = shift_grid(g, 2, 0, WrapMode::Open);
  EXPECT_EQ(s.row_coords, (std::vector<double>{-2, -1, 0, 1}));
  EXPECT_LE(max_oracle_error(s), 1e-6);
}

TEST(ShiftGrid, CircularNeedsPeriod) {
  auto g = build_grid<float>(4, 4, 4);
  g.wrap_period_h.reset();
  EXPECT_THROW(shift_grid(g, 1, 0, WrapMode::Circular), std::invalid_argument);
}

TEST(ShiftGrid, GroupLawProperty) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> shift(-20.0, 20.0);
  std::uniform_int_distribution<int> size(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const int H = size(rng), W = size(rng);
    const auto g = build_grid<float>(H, W, 8);
    const double a = shift(rng), b = shift(rng), c = shift(rng), d = shift(rng);
    const auto twice = shift_grid(shift_grid(g, a, c, WrapMode::Circular), b, d, WrapMode::Circular);
    const auto once = shift_grid(g, a + b, c + d, WrapMode::Circular);
    ASSERT_LE(max_abs_diff(twice, once), 1e-6) << "trial " << trial;
    ASSERT_LE(twice.data.abs().maxCoeff(), 1.0f);
  }
}

TEST(ScaleShiftAmount, Examples) {
  EXPECT_EQ(scale_shift_amount(16, 7, 7), 16.0);
  EXPECT_EQ(scale_shift_amount(16, 1, 7), 0.25);
  EXPECT_EQ(scale_shift_amount(1, 4, 5), 0.5);
  EXPECT_THROW(scale_shift_amount(1, 0, 5), std::invalid_argument);
  EXPECT_THROW(scale_shift_amount(1, 6, 5), std::invalid_argument);
}

TEST(ShiftPyramid, Offsets) {
  const auto p = build_pyramid<float>(4, 4, {8, 8, 8, 8, 8});
  EXPECT_EQ(p.levels.back().height, 64);
  const auto s = shift_pyramid(p, 16, 0, WrapMode::Circular);
  EXPECT_EQ(s.offset_h, (std::vector<double>{1, 2, 4, 8, 16}));
  EXPECT_EQ(shift_pyramid(p, 1, 0, WrapMode::Circular).offset_h[0], 0.0625);
  const auto id = shift_pyramid(p, 0, 0, WrapMode::Circular);
  for (int l = 0; l < 5; ++l) EXPECT_EQ(max_abs_diff(id.levels[l], p.levels[l]), 0.0);
}

TEST(ShiftPyramid, LevelSizesAreDyadic) {
  const auto p = build_pyramid<float>(3, 5, {4, 8, 12});
  for (int l = 0; l < 3; ++l) {
    EXPECT_EQ(p.levels[l].height, 3 << l);
    EXPECT_EQ(p.levels[l].width, 5 << l);
  }
}

TEST(ShiftPyramid, LatticeShiftsGiveIntegerOffsets) {
  const int L = 6;
  const auto p = build_pyramid<float>(2, 2, std::vector<int>(L, 4));
  for (int m = -3; m <= 3; ++m) {
    const auto s = shift_pyramid(p, m * 32.0, -m * 64.0, WrapMode::Circular);
    for (int l = 0; l < L; ++l) {
      EXPECT_EQ(s.offset_h[l], std::round(s.offset_h[l]));
      EXPECT_EQ(s.offset_w[l], std::round(s.offset_w[l]));
    }
  }
}

TEST(ResizeGrid, Examples) {
  const auto g = build_grid<float>(4, 4, 8);
  EXPECT_EQ(max_abs_diff(resize_grid(g, 4, 4), g), 0.0);

  const auto up = resize_grid(g, 8, 8);
  const auto want = encode_position<float>(1, 1, 8);
  for (int c = 0; c < 8; ++c) EXPECT_EQ(up.at(c, 2, 2), want[c]);

  const auto six = resize_grid(g, 6, 6);
  for (int c = 0; c < 8; ++c) EXPECT_NEAR(six.at(c, 1, 0), static_cast<double>(oracle_value(c, 2.0L / 3.0L, 0, 8)), 1e-6);
}

TEST(ResizeGrid, RoundTrip) {
  for (int hw : {3, 4, 7}) {
    const auto g = build_grid<float>(hw, hw + 1, 12);
    const auto back = resize_grid(resize_grid(g, 2 * hw, 2 * (hw + 1)), hw, hw + 1);
    EXPECT_LE(max_abs_diff(back, g), 1e-6);
  }
}

TEST(TileGrid, RepeatsWidth) {
  const int W = 6;
  const auto g = build_grid<float>(4, W, 8);
  const auto t = tile_grid(g, {{0, 4}}, {{0, W}, {0, W}});
  ASSERT_EQ(t.width, 2 * W);
  for (int c = 0; c < 8; ++c)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < W; ++j) EXPECT_EQ(t.at(c, i, W + j), t.at(c, i, j));
}

TEST(TileGrid, SingleSegmentIsIdentity) {
  const auto g = build_grid<float>(5, 6, 8);
  EXPECT_EQ(max_abs_diff(tile_grid(g, {{0, 5}}, {{0, 6}}), g), 0.0);
}

TEST(TileGrid, TrailingHalf) {
  const int W = 8;
  const auto g = build_grid<float>(3, W, 4);
  const auto t = tile_grid(g, {{0, 3}}, {{0, W}, {W / 2.0, W}});
  ASSERT_EQ(t.width, W + W / 2);
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < W / 2; ++j) EXPECT_EQ(t.at(c, i, W + j), g.at(c, i, W / 2 + j));
}

TEST(TileGrid, Errors) {
  const auto g = build_grid<float>(3, 3, 4);
  EXPECT_THROW(tile_grid(g, {}, {{0, 3}}), std::invalid_argument);
  EXPECT_THROW(tile_grid(g, {{0, 3}}, {}), std::invalid_argument);
  EXPECT_THROW(tile_grid(g, {{2, 2}}, {{0, 3}}), std::invalid_argument);
}

TEST(ExtendGrid, Examples) {
  const auto g = build_grid<float>(4, 8, 8);
  EXPECT_EQ(max_abs_diff(extend_grid(g, 0, 0), g), 0.0);

  const auto e = extend_grid(g, 0, 4);
  ASSERT_EQ(e.width, 16);
  ASSERT_EQ(e.height, 4);
  for (int c = 0; c < 8; ++c)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 8; ++j) EXPECT_EQ(e.at(c, i, 4 + j), g.at(c, i, j));
  // Column 3 of the extended grid sits at coordinate -1.
  EXPECT_EQ(e.col_coords[3], -1.0);
  EXPECT_NEAR(e.at(4, 0, 3), -0.841471, 1e-6);
  EXPECT_LE(max_oracle_error(e), 1e-6);
  EXPECT_FALSE(e.wrap_period_w.has_value());
  EXPECT_THROW(extend_grid(g, -1, 0), std::invalid_argument);
}

TEST(PEGrid, Bounded) {
  const auto g = build_grid<float>(16, 16, 32);
  EXPECT_LE(g.data.abs().maxCoeff(), 1.0f);
  EXPECT_LE(extend_grid(g, 40, 3).data.abs().maxCoeff(), 1.0f);
  EXPECT_LE(resize_grid(g, 37, 5).data.abs().maxCoeff(), 1.0f);
  EXPECT_LE(shift_grid(g, -3.3, 1.7, WrapMode::Open).data.abs().maxCoeff(), 1.0f);
}

TEST(PEGrid, InjectiveUpTo1024) {
  // A 2-D code is a concatenation of two axis codes, so two positions
  // collide only if both axis codes do. Check the axis code pairwise.
  constexpr int N = 1024;
  const auto g = build_grid<float>(N, 1, 4);
  double closest = INFINITY;
  for (int a = 0; a < N; ++a) {
    for (int b = a + 1; b < N; ++b) {
      const double d = std::max(std::fabs(g.at(0, a, 0) - g.at(0, b, 0)), std::fabs(g.at(1, a, 0) - g.at(1, b, 0)));
      closest = std::min(closest, d);
    }
  }
  EXPECT_GT(closest, 1e-9);

  const auto small = build_grid<float>(24, 24, 8);
  for (int p = 0; p < 24 * 24; ++p) {
    for (int q = p + 1; q < 24 * 24; ++q) {
      const auto diff = (small.column(p / 24, p % 24) - small.column(q / 24, q % 24)).abs().maxCoeff();
      ASSERT_GT(diff, 1e-9);
    }
  }
}

}  // namespace
}  // namespace mspe
