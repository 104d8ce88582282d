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

// Multi-scale sinusoidal positional encodings.
//
// A PEGrid stores the embedding of every pixel of one scale together with
// the real-valued coordinates it was evaluated at. Every transform (shift,
// resize, tile, extend) manipulates the coordinate axes and re-evaluates the
// closed form, so fractional coordinates are exact rather than interpolated.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mspe {

enum class WrapMode { Circular, Open };

namespace detail {

inline void require_finite(double coord) {
  if (!std::isfinite(coord)) {
    throw std::invalid_argument("positional coordinate must be finite");
  }
}

inline void require_channels(int channels) {
  if (channels < 4 || channels % 4 != 0) {
    throw std::invalid_argument("positional encoding needs a channel count divisible by 4 (got " +
                                std::to_string(channels) + ")");
  }
}

// Reduces x into [0, period). Values within 1e-9 of either end snap to 0 so
// that composed shifts land on the same lattice point as a single shift.
inline double wrap(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0) r += period;
  const double eps = 1e-9 * std::max(1.0, period);
  if (r >= period - eps || std::abs(r) < eps) r = 0.0;
  return r;
}

}  // namespace detail

/// Sinusoidal code of a single coordinate: element 2k is
/// sin(coord / 10000^{k/(2d)}) and element 2k+1 the matching cosine.
template <typename Scalar = float>
Eigen::Array<Scalar, Eigen::Dynamic, 1> encode_axis(double coord, int half_pairs) {
  if (half_pairs < 1) throw std::invalid_argument("encode_axis needs d >= 1");
  detail::require_finite(coord);
  Eigen::Array<Scalar, Eigen::Dynamic, 1> out(2 * half_pairs);
  for (int k = 0; k < half_pairs; ++k) {
    const double arg = coord / std::pow(10000.0, static_cast<double>(k) / (2.0 * half_pairs));
    out[2 * k] = static_cast<Scalar>(std::sin(arg));
    out[2 * k + 1] = static_cast<Scalar>(std::cos(arg));
  }
  return out;
}

/// Code of pixel (i, j): the row encoding followed by the column encoding.
template <typename Scalar = float>
Eigen::Array<Scalar, Eigen::Dynamic, 1> encode_position(double i, double j, int channels) {
  detail::require_channels(channels);
  const int d = channels / 4;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> out(channels);
  out.head(2 * d) = encode_axis<Scalar>(i, d);
  out.tail(2 * d) = encode_axis<Scalar>(j, d);
  return out;
}

/// One scale's embedding, channel-major (C x H x W, row-major spatially).
template <typename Scalar = float>
struct PEGrid {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> row_coords;
  std::vector<double> col_coords;
  Array data;
  std::optional<double> wrap_period_h;
  std::optional<double> wrap_period_w;

  int half_pairs() const { return channels / 4; }
  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }

  Scalar at(int c, int i, int j) const {
    return data[static_cast<Eigen::Index>(c * plane() + static_cast<std::size_t>(i) * width + j)];
  }

  /// Embedding vector at pixel (i, j).
  Array column(int i, int j) const {
    Array v(channels);
    for (int c = 0; c < channels; ++c) v[c] = at(c, i, j);
    return v;
  }
};

/// Evaluates the closed form on arbitrary coordinate axes.
template <typename Scalar = float>
PEGrid<Scalar> evaluate_grid(int channels, std::vector<double> rows, std::vector<double> cols,
                             std::optional<double> period_h = std::nullopt,
                             std::optional<double> period_w = std::nullopt) {
  detail::require_channels(channels);
  if (rows.empty() || cols.empty()) throw std::invalid_argument("grid needs H, W >= 1");
  const int d = channels / 4;
  PEGrid<Scalar> g;
  g.height = static_cast<int>(rows.size());
  g.width = static_cast<int>(cols.size());
  g.channels = channels;
  g.wrap_period_h = period_h;
  g.wrap_period_w = period_w;
  g.data.resize(static_cast<Eigen::Index>(channels) * g.height * g.width);

  const std::size_t plane = g.plane();
  for (int i = 0; i < g.height; ++i) {
    const auto code = encode_axis<Scalar>(rows[i], d);
    for (int c = 0; c < 2 * d; ++c) {
      Scalar* dst = g.data.data() + c * plane + static_cast<std::size_t>(i) * g.width;
      std::fill(dst, dst + g.width, code[c]);
    }
  }
  for (int j = 0; j < g.width; ++j) {
    const auto code = encode_axis<Scalar>(cols[j], d);
    for (int c = 0; c < 2 * d; ++c) {
      Scalar* dst = g.data.data() + (2 * d + c) * plane + j;
      for (int i = 0; i < g.height; ++i) dst[static_cast<std::size_t>(i) * g.width] = code[c];
    }
  }
  g.row_coords = std::move(rows);
  g.col_coords = std::move(cols);
  return g;
}

inline std::vector<double> unit_axis(int n, double start = 0.0) {
  std::vector<double> a(n);
  for (int i = 0; i < n; ++i) a[i] = start + i;
  return a;
}

/// Default grid on integer coordinates 0..H-1 x 0..W-1, circular with period (H, W).
template <typename Scalar = float>
PEGrid<Scalar> build_grid(int height, int width, int channels) {
  if (height < 1 || width < 1) throw std::invalid_argument("grid needs H, W >= 1");
  return evaluate_grid<Scalar>(channels, unit_axis(height), unit_axis(width), height, width);
}

/// Output index i reads source coordinate i - dh (content moves down for dh > 0).
template <typename Scalar>
PEGrid<Scalar> shift_grid(const PEGrid<Scalar>& g, double dh, double dw, WrapMode mode) {
  detail::require_finite(dh);
  detail::require_finite(dw);
  if (mode == WrapMode::Circular && (!g.wrap_period_h || !g.wrap_period_w)) {
    throw std::invalid_argument("circular shift needs wrap periods on the grid");
  }
  std::vector<double> rows(g.row_coords), cols(g.col_coords);
  for (double& r : rows) r = mode == WrapMode::Circular ? detail::wrap(r - dh, *g.wrap_period_h) : r - dh;
  for (double& c : cols) c = mode == WrapMode::Circular ? detail::wrap(c - dw, *g.wrap_period_w) : c - dw;
  return evaluate_grid<Scalar>(g.channels, std::move(rows), std::move(cols), g.wrap_period_h,
                               g.wrap_period_w);
}

/// Image-scale shift k expressed at scale l of an L-scale stack: k * 2^(l-L).
inline double scale_shift_amount(double k, int l, int num_levels) {
  if (l < 1 || l > num_levels) {
    throw std::invalid_argument("scale index " + std::to_string(l) + " outside [1, " +
                                std::to_string(num_levels) + "]");
  }
  return std::ldexp(k, l - num_levels);
}

namespace detail {

// Linear interpolation of a coordinate axis at fractional index s, continuing
// with unit steps beyond the last sample.
inline double axis_at(const std::vector<double>& axis, double s) {
  const auto n = static_cast<double>(axis.size());
  if (axis.size() == 1) return axis[0] + s;
  if (s >= n - 1) return axis.back() + (s - (n - 1));
  const auto i0 = static_cast<std::size_t>(std::floor(s));
  const double t = s - static_cast<double>(i0);
  return t == 0.0 ? axis[i0] : axis[i0] + t * (axis[i0 + 1] - axis[i0]);
}

inline std::vector<double> resample_axis(const std::vector<double>& axis, int n_out) {
  std::vector<double> out(n_out);
  const double n_in = static_cast<double>(axis.size());
  for (int i = 0; i < n_out; ++i) out[i] = axis_at(axis, i * n_in / n_out);
  return out;
}

}  // namespace detail

/// Target index i2 maps to source index i2 * H / H2, so doubling the
/// resolution lands even indices on the original lattice.
template <typename Scalar>
PEGrid<Scalar> resize_grid(const PEGrid<Scalar>& g, int new_height, int new_width) {
  if (new_height < 1 || new_width < 1) throw std::invalid_argument("resize needs H2, W2 >= 1");
  return evaluate_grid<Scalar>(g.channels, detail::resample_axis(g.row_coords, new_height),
                               detail::resample_axis(g.col_coords, new_width), g.wrap_period_h,
                               g.wrap_period_w);
}

/// Half-open coordinate interval [begin, end), sampled at unit steps.
struct Segment {
  double begin = 0.0;
  double end = 0.0;
};

namespace detail {

inline std::vector<double> concat_segments(const std::vector<Segment>& segments, const char* axis) {
  if (segments.empty()) throw std::invalid_argument(std::string("tile_grid: empty ") + axis + " segment list");
  std::vector<double> out;
  for (const auto& s : segments) {
    require_finite(s.begin);
    require_finite(s.end);
    if (!(s.end > s.begin)) throw std::invalid_argument(std::string("tile_grid: empty ") + axis + " segment");
    for (double c = s.begin; c < s.end; c += 1.0) out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// Concatenates coordinate segments along each axis and re-evaluates.
template <typename Scalar>
PEGrid<Scalar> tile_grid(const PEGrid<Scalar>& g, const std::vector<Segment>& h_segments,
                         const std::vector<Segment>& w_segments) {
  return evaluate_grid<Scalar>(g.channels, detail::concat_segments(h_segments, "row"),
                               detail::concat_segments(w_segments, "column"), g.wrap_period_h,
                               g.wrap_period_w);
}

/// Extends the coordinate range by ceil(margin) unit steps on each side.
/// The result is an open grid: extrapolated coordinates never wrap.
template <typename Scalar>
PEGrid<Scalar> extend_grid(const PEGrid<Scalar>& g, double margin_h, double margin_w) {
  if (!(margin_h >= 0) || !(margin_w >= 0)) throw std::invalid_argument("extend_grid needs margins >= 0");
  auto extend = [](const std::vector<double>& axis, double margin) {
    const int n = static_cast<int>(std::ceil(margin));
    std::vector<double> out;
    out.reserve(axis.size() + 2 * n);
    for (int k = n; k >= 1; --k) out.push_back(axis.front() - k);
    out.insert(out.end(), axis.begin(), axis.end());
    for (int k = 1; k <= n; ++k) out.push_back(axis.back() + k);
    return out;
  };
  if (margin_h == 0 && margin_w == 0) return g;
  return evaluate_grid<Scalar>(g.channels, extend(g.row_coords, margin_h), extend(g.col_coords, margin_w));
}

/// L consistent grids, coarsest first, with the accumulated per-level shift.
template <typename Scalar = float>
struct PEPyramid {
  std::vector<PEGrid<Scalar>> levels;
  int dyadic_factor = 2;
  std::vector<double> offset_h;
  std::vector<double> offset_w;

  int num_levels() const { return static_cast<int>(levels.size()); }
};

/// Level l (0-based) has size (base_h, base_w) * 2^l and channels[l] channels.
template <typename Scalar = float>
PEPyramid<Scalar> build_pyramid(int base_h, int base_w, const std::vector<int>& channels) {
  if (channels.empty()) throw std::invalid_argument("pyramid needs at least one level");
  PEPyramid<Scalar> p;
  for (std::size_t l = 0; l < channels.size(); ++l) {
    p.levels.push_back(build_grid<Scalar>(base_h << l, base_w << l, channels[l]));
  }
  p.offset_h.assign(channels.size(), 0.0);
  p.offset_w.assign(channels.size(), 0.0);
  return p;
}

/// Shifts every level by the image-scale amount (dh, dw) rescaled to that level.
template <typename Scalar>
PEPyramid<Scalar> shift_pyramid(const PEPyramid<Scalar>& p, double dh, double dw, WrapMode mode) {
  if (p.dyadic_factor != 2) throw std::invalid_argument("shift_pyramid supports dyadic pyramids only");
  const int L = p.num_levels();
  PEPyramid<Scalar> out;
  out.dyadic_factor = p.dyadic_factor;
  out.offset_h = p.offset_h;
  out.offset_w = p.offset_w;
  out.offset_h.resize(L, 0.0);
  out.offset_w.resize(L, 0.0);
  for (int l = 0; l < L; ++l) {
    const double sh = scale_shift_amount(dh, l + 1, L);
    const double sw = scale_shift_amount(dw, l + 1, L);
    out.levels.push_back(shift_grid(p.levels[l], sh, sw, mode));
    out.offset_h[l] += sh;
    out.offset_w[l] += sw;
  }
  return out;
}

}  // namespace mspe
