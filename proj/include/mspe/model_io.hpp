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

// Persistence of generator and denoiser parameters in the checkpoint
// container. The model configuration travels in the manifest under "model".

#include "mspe/checkpoint.hpp"
#include "mspe/denoiser.hpp"
#include "mspe/generator.hpp"

#include <json.hpp>

namespace mspe {

nlohmann::json to_json(const GeneratorConfig& cfg);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DenoiserConfig& cfg);
DenoiserConfig denoiser_config_from_json(const nlohmann::json& j);

std::string to_string(Padding padding);
/// Accepts "zero" or "circular".
Padding parse_padding(const std::string& name);

/// Adds every named tensor as a "param" entry.
void store_parameters(Checkpoint& ckpt, const std::vector<std::pair<std::string, Tensor>>& params);
/// Copies stored values into the given tensors in place; shapes must match.
void restore_parameters(const Checkpoint& ckpt, const std::vector<std::pair<std::string, Tensor>>& params);

Checkpoint save_generator(const GeneratorSpec& spec);
GeneratorSpec load_generator(const Checkpoint& ckpt);
Checkpoint save_denoiser(const Denoiser& model);
Denoiser load_denoiser(const Checkpoint& ckpt);

}  // namespace mspe
