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

// Portable pixmap input and output. Tensor values in [-1, 1] map to 0..255.

#include "mspe/tensor.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace mspe {

/// Batch item n as binary PPM (3 channels) or PGM (1 channel).
void write_pnm(const std::filesystem::path& path, const Tensor& image, int n = 0);
/// The encoded bytes write_pnm would store.
std::string encode_pnm(const Tensor& image, int n = 0);

/// Binary P5/P6 bytes as a 1 x C x H x W tensor in [-1, 1]; maxval must be 255.
Tensor decode_pnm(std::span<const std::uint8_t> bytes);
Tensor read_pnm(const std::filesystem::path& path);

/// Heatmap as PGM, linearly mapping [lo, hi] to 0..255.
void write_heatmap(const std::filesystem::path& path, const Eigen::ArrayXXd& map, double lo, double hi);

}  // namespace mspe
