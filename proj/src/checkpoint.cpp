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

#include "mspe/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mspe {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'M', 'S', 'P', 'E'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

}  // namespace

void Checkpoint::add(const std::string& name, const std::string& kind, const Tensor& t) {
  if (has(name)) throw std::invalid_argument("checkpoint already has an entry named '" + name + "'");
  entries.push_back({name, kind, t.shape(), t.data()});
}

bool Checkpoint::has(const std::string& name) const {
  return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.name == name; });
}

const CheckpointEntry& Checkpoint::at(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw std::out_of_range("checkpoint has no entry named '" + name + "'");
}

Tensor Checkpoint::tensor(const std::string& name) const {
  const auto& e = at(name);
  return Tensor::from_array(e.shape, e.data);
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json manifest;
  manifest["config"] = ckpt.config;
  manifest["entries"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& e : ckpt.entries) {
    const std::uint64_t length = static_cast<std::uint64_t>(e.data.size()) * 4;
    manifest["entries"].push_back({{"name", e.name},
                                   {"kind", e.kind},
                                   {"shape", {e.shape.n, e.shape.c, e.shape.h, e.shape.w}},
                                   {"dtype", "f32"},
                                   {"offset", offset},
                                   {"length", length}});
    offset += length;
  }
  const std::string header = manifest.dump();
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  const std::size_t base = out.size();
  out.resize(base + offset);
  std::size_t at = base;
  for (const auto& e : ckpt.entries) {
    const std::size_t n = static_cast<std::size_t>(e.data.size()) * 4;
    if (n) std::memcpy(out.data() + at, e.data.data(), n);
    at += n;
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw FormatError("checkpoint truncated before the header", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not a checkpoint (bad magic)", 0);
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")",
                      4);
  }
  const std::uint32_t header_len = get_u32(bytes, 8);
  if (bytes.size() - 12 < header_len) throw FormatError("checkpoint manifest truncated", bytes.size());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint manifest is not valid JSON: ") + e.what(), 12);
  }
  const std::size_t base = 12 + header_len;
  const std::size_t payload = bytes.size() - base;

  Checkpoint ckpt;
  try {
    ckpt.config = manifest.at("config");
    std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
    for (const auto& m : manifest.at("entries")) {
      CheckpointEntry e;
      e.name = m.at("name").get<std::string>();
      e.kind = m.at("kind").get<std::string>();
      if (m.at("dtype").get<std::string>() != "f32") throw FormatError("entry '" + e.name + "' has unsupported dtype", 12);
      const auto shape = m.at("shape").get<std::vector<int>>();
      if (shape.size() != 4 || std::any_of(shape.begin(), shape.end(), [](int d) { return d < 0; })) {
        throw FormatError("entry '" + e.name + "' has a malformed shape", 12);
      }
      e.shape = {shape[0], shape[1], shape[2], shape[3]};
      const auto offset = m.at("offset").get<std::uint64_t>();
      const auto length = m.at("length").get<std::uint64_t>();
      if (length != static_cast<std::uint64_t>(e.shape.numel()) * 4) {
        throw FormatError("entry '" + e.name + "' length does not match its shape", 12);
      }
      if (offset > payload || length > payload - offset) {
        throw FormatError("entry '" + e.name + "' lies outside the payload", base + offset);
      }
      spans.emplace_back(offset, length);
      e.data.resize(static_cast<Eigen::Index>(length / 4));
      if (length) std::memcpy(e.data.data(), bytes.data() + base + offset, length);
      ckpt.entries.push_back(std::move(e));
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t k = 1; k < spans.size(); ++k) {
      if (spans[k - 1].first + spans[k - 1].second > spans[k].first) {
        throw FormatError("checkpoint entries overlap", base + spans[k].first);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint manifest is malformed: ") + e.what(), 12);
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string(), 0);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace mspe
