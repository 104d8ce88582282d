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

#include "mspe/image_io.hpp"

#include "mspe/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <vector>

namespace mspe {
namespace {

unsigned char to_byte(double v) { return static_cast<unsigned char>(std::clamp(std::lround(v * 255.0), 0L, 255L)); }

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

std::string encode_pnm(const Tensor& image, int n) {
  const Shape s = image.shape();
  if (s.c != 1 && s.c != 3) throw std::invalid_argument("pixmaps need 1 or 3 channels, got " + std::to_string(s.c));
  if (n < 0 || n >= s.n) throw std::invalid_argument("pixmap batch index out of range");
  std::string out = (s.c == 3 ? "P6\n" : "P5\n") + std::to_string(s.w) + " " + std::to_string(s.h) + "\n255\n";
  for (int i = 0; i < s.h; ++i)
    for (int j = 0; j < s.w; ++j)
      for (int c = 0; c < s.c; ++c) out.push_back(static_cast<char>(to_byte((image.at(n, c, i, j) + 1.0) * 0.5)));
  return out;
}

void write_pnm(const std::filesystem::path& path, const Tensor& image, int n) { write_bytes(path, encode_pnm(image, n)); }

Tensor decode_pnm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  // Header tokens are separated by whitespace; '#' starts a comment line.
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (std::isspace(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    if (start == pos) throw FormatError("pixmap header ends early", start);
    return std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start), bytes.begin() + static_cast<std::ptrdiff_t>(pos));
  };
  auto number = [&](const char* what) {
    const std::size_t at = pos;
    const std::string t = token();
    if (t.find_first_not_of("0123456789") != std::string::npos || t.size() > 6) {
      throw FormatError(std::string("pixmap ") + what + " is not a positive integer", at);
    }
    const int v = std::stoi(t);
    if (v < 1) throw FormatError(std::string("pixmap ") + what + " must be positive", at);
    return v;
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P6") throw FormatError("not a binary PGM/PPM file", 0);
  const int c = magic == "P6" ? 3 : 1;
  const int w = number("width"), h = number("height");
  const std::size_t max_at = pos;
  if (number("maxval") != 255) throw FormatError("only 8-bit pixmaps are supported", max_at);
  ++pos;  // single whitespace before the raster
  const std::size_t need = static_cast<std::size_t>(w) * h * c;
  if (bytes.size() < pos + need) {
    throw FormatError("pixmap raster has " + std::to_string(bytes.size() - std::min(pos, bytes.size())) +
                          " bytes, expected " + std::to_string(need),
                      bytes.size());
  }
  Tensor t = Tensor::zeros({1, c, h, w});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int k = 0; k < c; ++k) t.at(0, k, i, j) = bytes[pos++] / 127.5f - 1.0f;
  return t;
}

Tensor read_pnm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string(), 0);
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  return decode_pnm(bytes);
}

void write_heatmap(const std::filesystem::path& path, const Eigen::ArrayXXd& map, double lo, double hi) {
  const double span = hi > lo ? hi - lo : 1.0;
  std::string out = "P5\n" + std::to_string(map.cols()) + " " + std::to_string(map.rows()) + "\n255\n";
  for (Eigen::Index i = 0; i < map.rows(); ++i)
    for (Eigen::Index j = 0; j < map.cols(); ++j) out.push_back(static_cast<char>(to_byte((map(i, j) - lo) / span)));
  write_bytes(path, out);
}

}  // namespace mspe
