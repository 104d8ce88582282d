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

// Checkpoint container:
//   "MSPE" | u32 version | u32 header length | JSON manifest | payload
// All integers and floats are little-endian. Manifest entries carry name,
// kind, shape, dtype and the byte offset/length of their block within the
// payload.

#include "mspe/errors.hpp"
#include "mspe/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mspe {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  std::string kind;
  Shape shape;
  Eigen::ArrayXf data;
};

struct Checkpoint {
  nlohmann::json config = nlohmann::json::object();
  std::vector<CheckpointEntry> entries;

  void add(const std::string& name, const std::string& kind, const Tensor& t);
  bool has(const std::string& name) const;
  const CheckpointEntry& at(const std::string& name) const;
  /// Detached copy of an entry.
  Tensor tensor(const std::string& name) const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mspe
