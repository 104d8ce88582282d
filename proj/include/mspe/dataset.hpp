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

// Spatially biased training images: IDX ingestion, patch placement,
// colorization and a procedural glyph fallback. Pixels use [-1, 1] with -1 as
// background.

#include "mspe/errors.hpp"
#include "mspe/tensor.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mspe {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxArray {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;

  std::size_t count() const { return dims.empty() ? 0 : dims[0]; }
  /// Image k as intensities in [0, 1]; requires a 3-D image file.
  Eigen::ArrayXXf image(std::size_t k) const;
};

IdxArray parse_idx(std::span<const std::uint8_t> bytes);
IdxArray read_idx_file(const std::filesystem::path& path);

/// Centres `digit` (intensities in [0, 1]) in a patch x patch square by zero
/// padding and places that square at (top, left) on a canvas x canvas black
/// image. Returns values in [-1, 1].
Eigen::ArrayXXf make_biased_canvas(const Eigen::ArrayXXf& digit, int canvas, int patch, int top = 0, int left = 0);

using Rgb = std::array<float, 3>;
/// Ten saturated hues, indexed by label.
const std::array<Rgb, 10>& palette();
const std::array<const char*, 10>& palette_names();

/// out_k = -1 + 2 * v * color_k, where v = (x + 1) / 2. Returns 3 x H x W planes.
Eigen::ArrayXf colorize(const Eigen::ArrayXXf& gray, int palette_index);
/// Palette index drawn from the seed.
Eigen::ArrayXf colorize_seeded(const Eigen::ArrayXXf& gray, std::uint64_t seed);

struct BiasedCanvasSet {
  Tensor images;  // N x C x canvas x canvas
  std::vector<int> labels;
  std::vector<std::array<int, 2>> placement;  // per-image (top, left)
  int patch = 32;
};

struct CanvasOptions {
  int canvas = 64;
  int patch = 32;
  int channels = 3;  // 1 = grayscale, 3 = colorized by label
  int top = 0;
  int left = 0;
};

/// Procedural glyphs from ten shape classes drawn uniformly.
BiasedCanvasSet synth_glyphs(int n, std::uint64_t seed, const CanvasOptions& opts = {});

/// The first n images of an IDX image/label pair.
BiasedCanvasSet from_idx(const IdxArray& images, const IdxArray& labels, int n, const CanvasOptions& opts = {});

/// Raw glyph of class `label` drawn in a size x size box, intensities in [0, 1].
Eigen::ArrayXXf draw_glyph(int label, int size, std::uint64_t seed);

}  // namespace mspe
