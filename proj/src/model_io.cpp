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

#include "mspe/model_io.hpp"

namespace mspe {

std::string to_string(Padding padding) { return padding == Padding::Zero ? "zero" : "circular"; }

Padding parse_padding(const std::string& name) {
  if (name == "zero") return Padding::Zero;
  if (name == "circular") return Padding::Circular;
  throw std::invalid_argument("unknown padding '" + name + "' (expected zero or circular)");
}

nlohmann::json to_json(const GeneratorConfig& cfg) {
  return {{"kind", "generator"},
          {"mode", to_string(cfg.mode)},
          {"base_h", cfg.base_h},
          {"base_w", cfg.base_w},
          {"channels", cfg.channels},
          {"image_channels", cfg.image_channels},
          {"latent_dim", cfg.latent_dim},
          {"padding", to_string(cfg.padding)},
          {"noise_injection", cfg.noise_injection},
          {"gamma_init", cfg.gamma_init},
          {"seed", cfg.seed}};
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "generator") throw std::invalid_argument("configuration does not describe a generator");
  GeneratorConfig cfg;
  cfg.mode = parse_gen_mode(j.at("mode").get<std::string>());
  cfg.base_h = j.at("base_h").get<int>();
  cfg.base_w = j.at("base_w").get<int>();
  cfg.channels = j.at("channels").get<std::vector<int>>();
  cfg.image_channels = j.at("image_channels").get<int>();
  cfg.latent_dim = j.at("latent_dim").get<int>();
  cfg.padding = parse_padding(j.at("padding").get<std::string>());
  cfg.noise_injection = j.at("noise_injection").get<bool>();
  cfg.gamma_init = j.at("gamma_init").get<float>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const DenoiserConfig& cfg) {
  return {{"kind", "denoiser"},
          {"size", cfg.size},
          {"image_channels", cfg.image_channels},
          {"channels", cfg.channels},
          {"time_dim", cfg.time_dim},
          {"time_hidden", cfg.time_hidden},
          {"steps", cfg.steps},
          {"use_pe", cfg.use_pe},
          {"padding", to_string(cfg.padding)},
          {"gamma_init", cfg.gamma_init},
          {"seed", cfg.seed}};
}

DenoiserConfig denoiser_config_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "denoiser") throw std::invalid_argument("configuration does not describe a denoiser");
  DenoiserConfig cfg;
  cfg.size = j.at("size").get<int>();
  cfg.image_channels = j.at("image_channels").get<int>();
  cfg.channels = j.at("channels").get<std::vector<int>>();
  cfg.time_dim = j.at("time_dim").get<int>();
  cfg.time_hidden = j.at("time_hidden").get<int>();
  cfg.steps = j.at("steps").get<int>();
  cfg.use_pe = j.at("use_pe").get<bool>();
  cfg.padding = parse_padding(j.at("padding").get<std::string>());
  cfg.gamma_init = j.at("gamma_init").get<float>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

void store_parameters(Checkpoint& ckpt, const std::vector<std::pair<std::string, Tensor>>& params) {
  for (const auto& [name, t] : params) ckpt.add(name, "param", t);
}

void restore_parameters(const Checkpoint& ckpt, const std::vector<std::pair<std::string, Tensor>>& params) {
  for (const auto& [name, t] : params) {
    const auto& e = ckpt.at(name);
    if (e.shape != t.shape()) {
      throw std::invalid_argument("checkpoint entry '" + name + "' has shape " + e.shape.str() + ", model expects " +
                                  t.shape().str());
    }
    Tensor target = t;
    target.data() = e.data;
  }
}

Checkpoint save_generator(const GeneratorSpec& spec) {
  Checkpoint ckpt;
  ckpt.config["model"] = to_json(spec.config);
  store_parameters(ckpt, spec.named_parameters());
  return ckpt;
}

GeneratorSpec load_generator(const Checkpoint& ckpt) {
  GeneratorSpec spec = make_generator(generator_config_from_json(ckpt.config.at("model")));
  restore_parameters(ckpt, spec.named_parameters());
  return spec;
}

Checkpoint save_denoiser(const Denoiser& model) {
  Checkpoint ckpt;
  ckpt.config["model"] = to_json(model.config);
  store_parameters(ckpt, model.named_parameters());
  return ckpt;
}

Denoiser load_denoiser(const Checkpoint& ckpt) {
  Denoiser model = make_denoiser(denoiser_config_from_json(ckpt.config.at("model")));
  restore_parameters(ckpt, model.named_parameters());
  return model;
}

}  // namespace mspe
