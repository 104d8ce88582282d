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

#include "mspe/dataset.hpp"

#include "mspe/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>

namespace mspe {
namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (static_cast<std::uint32_t>(b[at]) << 24) | (static_cast<std::uint32_t>(b[at + 1]) << 16) |
         (static_cast<std::uint32_t>(b[at + 2]) << 8) | static_cast<std::uint32_t>(b[at + 3]);
}

struct Vec2 {
  double x, y;
};

double seg_dist(Vec2 p, Vec2 a, Vec2 b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
  return std::hypot(p.x - a.x - t * dx, p.y - a.y - t * dy);
}

double shape_dist(int label, Vec2 p, double r) {
  const double len = std::hypot(p.x, p.y);
  switch (label) {
    case 0: return std::abs(len - r);
    case 1: return seg_dist(p, {0, -r}, {0, r});
    case 2: return seg_dist(p, {-r, 0}, {r, 0});
    case 3: return std::min(seg_dist(p, {0, -r}, {0, r}), seg_dist(p, {-r, 0}, {r, 0}));
    case 4: {
      const double q = 0.8 * r;
      return std::min(seg_dist(p, {-q, -q}, {q, q}), seg_dist(p, {-q, q}, {q, -q}));
    }
    case 5: return std::max(len - 0.7 * r, 0.0);
    case 6: return std::abs(std::max(std::abs(p.x), std::abs(p.y)) - 0.85 * r);
    case 7: {
      const Vec2 a{0, -r}, b{-r, 0.8 * r}, c{r, 0.8 * r};
      return std::min({seg_dist(p, a, b), seg_dist(p, b, c), seg_dist(p, c, a)});
    }
    case 8: {
      const double h = r / 2;
      return std::min(std::abs(std::hypot(p.x, p.y + h) - h), std::abs(std::hypot(p.x, p.y - h) - h));
    }
    default: return std::min(seg_dist(p, {-r, -r}, {-r, r}), seg_dist(p, {-r, r}, {r, r}));
  }
}

}  // namespace

Eigen::ArrayXXf IdxArray::image(std::size_t k) const {
  if (magic != kIdxImagesMagic || dims.size() != 3) throw std::invalid_argument("IDX array is not an image file");
  if (k >= count()) throw std::out_of_range("IDX image index out of range");
  const std::size_t h = dims[1], w = dims[2];
  Eigen::ArrayXXf img(h, w);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) img(i, j) = data[(k * h + i) * w + j] / 255.0f;
  return img;
}

IdxArray parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError("IDX header truncated", bytes.size());
  IdxArray out;
  out.magic = read_be32(bytes, 0);
  if (out.magic != kIdxImagesMagic && out.magic != kIdxLabelsMagic) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", out.magic);
    throw FormatError(std::string("IDX magic ") + buf + " is neither 0x00000803 nor 0x00000801", 0);
  }
  const std::size_t ndims = out.magic == kIdxImagesMagic ? 3 : 1;
  if (bytes.size() < 4 + 4 * ndims) throw FormatError("IDX header truncated", bytes.size());
  std::size_t expected = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    out.dims.push_back(read_be32(bytes, 4 + 4 * d));
    expected *= out.dims.back();
  }
  const std::size_t header = 4 + 4 * ndims;
  const std::size_t actual = bytes.size() - header;
  if (actual != expected) {
    throw FormatError("IDX payload length " + std::to_string(actual) + " does not match expected " +
                          std::to_string(expected),
                      actual < expected ? bytes.size() : header + expected);
  }
  out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return out;
}

IdxArray read_idx_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string(), 0);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_idx(bytes);
}

Eigen::ArrayXXf make_biased_canvas(const Eigen::ArrayXXf& digit, int canvas, int patch, int top, int left) {
  const int h = static_cast<int>(digit.rows()), w = static_cast<int>(digit.cols());
  if (patch < 1 || patch > canvas) throw std::invalid_argument("make_biased_canvas: need 1 <= patch <= canvas");
  if (h > patch || w > patch) throw std::invalid_argument("make_biased_canvas: digit larger than patch");
  if (top < 0 || left < 0 || top + patch > canvas || left + patch > canvas) {
    throw std::invalid_argument("make_biased_canvas: patch does not fit the canvas at the given offset");
  }
  Eigen::ArrayXXf out = Eigen::ArrayXXf::Constant(canvas, canvas, -1.0f);
  const int r0 = top + (patch - h) / 2, c0 = left + (patch - w) / 2;
  out.block(r0, c0, h, w) = 2.0f * digit.min(1.0f).max(0.0f) - 1.0f;
  return out;
}

const std::array<Rgb, 10>& palette() {
  static const std::array<Rgb, 10> p{{{1.0f, 0.0f, 0.0f},
                                      {1.0f, 0.5f, 0.0f},
                                      {1.0f, 1.0f, 0.0f},
                                      {0.0f, 1.0f, 0.0f},
                                      {0.0f, 1.0f, 0.5f},
                                      {0.0f, 1.0f, 1.0f},
                                      {0.0f, 0.5f, 1.0f},
                                      {0.0f, 0.0f, 1.0f},
                                      {0.5f, 0.0f, 1.0f},
                                      {1.0f, 0.0f, 1.0f}}};
  return p;
}

const std::array<const char*, 10>& palette_names() {
  static const std::array<const char*, 10> n{"red",  "orange", "yellow", "green",  "spring",
                                             "cyan", "azure",  "blue",   "violet", "magenta"};
  return n;
}

Eigen::ArrayXf colorize(const Eigen::ArrayXXf& gray, int palette_index) {
  if (palette_index < 0 || palette_index >= 10) throw std::invalid_argument("colorize: palette index out of range");
  const Rgb& color = palette()[palette_index];
  const Eigen::Index plane = gray.size();
  Eigen::ArrayXf out(3 * plane);
  // Row-major planes to match tensor layout.
  Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> v = (gray + 1.0f) * 0.5f;
  const Eigen::Map<const Eigen::ArrayXf> flat(v.data(), plane);
  for (int k = 0; k < 3; ++k) out.segment(k * plane, plane) = -1.0f + 2.0f * flat * color[k];
  return out;
}

Eigen::ArrayXf colorize_seeded(const Eigen::ArrayXXf& gray, std::uint64_t seed) {
  Philox rng(seed, 7);
  return colorize(gray, static_cast<int>(rng.below(10)));
}

Eigen::ArrayXXf draw_glyph(int label, int size, std::uint64_t seed) {
  Philox rng(seed, 11);
  const double scale = 0.8 + 0.2 * rng.uniform();
  const double cx = 0.06 * (rng.uniform() - 0.5), cy = 0.06 * (rng.uniform() - 0.5);
  const double thick = 0.09 + 0.05 * rng.uniform();
  const double r = 0.4 * scale;
  Eigen::ArrayXXf img(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const Vec2 p{(j + 0.5) / size - 0.5 - cx, (i + 0.5) / size - 0.5 - cy};
      const double d = shape_dist(label, p, r);
      img(i, j) = static_cast<float>(std::clamp((thick / 2 - d) * size + 0.5, 0.0, 1.0));
    }
  }
  return img;
}

namespace {

BiasedCanvasSet assemble(int n, const CanvasOptions& opts, const std::function<std::pair<Eigen::ArrayXXf, int>(int)>& item) {
  if (n < 1) throw std::invalid_argument("dataset needs n >= 1");
  if (opts.channels != 1 && opts.channels != 3) throw std::invalid_argument("dataset channels must be 1 or 3");
  BiasedCanvasSet set;
  set.patch = opts.patch;
  set.images = Tensor::zeros({n, opts.channels, opts.canvas, opts.canvas});
  const std::int64_t per = static_cast<std::int64_t>(opts.channels) * opts.canvas * opts.canvas;
  const std::int64_t plane = static_cast<std::int64_t>(opts.canvas) * opts.canvas;
  for (int k = 0; k < n; ++k) {
    auto [digit, label] = item(k);
    const Eigen::ArrayXXf canvas = make_biased_canvas(digit, opts.canvas, opts.patch, opts.top, opts.left);
    if (opts.channels == 3) {
      set.images.data().segment(k * per, per) = colorize(canvas, label);
    } else {
      Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = canvas;
      set.images.data().segment(k * per, plane) = Eigen::Map<const Eigen::ArrayXf>(rm.data(), plane);
    }
    set.labels.push_back(label);
    set.placement.push_back({opts.top, opts.left});
  }
  return set;
}

}  // namespace

BiasedCanvasSet synth_glyphs(int n, std::uint64_t seed, const CanvasOptions& opts) {
  Philox labels(seed, 3);
  const int size = opts.patch * 7 / 8;
  return assemble(n, opts, [&](int k) {
    const int label = static_cast<int>(labels.below(10));
    return std::pair{draw_glyph(label, size, seed * 1000003ULL + static_cast<std::uint64_t>(k)), label};
  });
}

BiasedCanvasSet from_idx(const IdxArray& images, const IdxArray& labels, int n, const CanvasOptions& opts) {
  if (images.magic != kIdxImagesMagic || labels.magic != kIdxLabelsMagic) {
    throw std::invalid_argument("from_idx: expected an image file and a label file");
  }
  if (static_cast<std::size_t>(n) > images.count() || static_cast<std::size_t>(n) > labels.count()) {
    throw std::invalid_argument("from_idx: requested " + std::to_string(n) + " images, files hold fewer");
  }
  return assemble(n, opts, [&](int k) {
    const int label = labels.data[k] % 10;
    return std::pair{images.image(k), label};
  });
}

}  // namespace mspe
