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

// Toy multi-scale synthesis stack.
//
// One 3x3 convolution per scale. Level 0 runs at the base size; every later
// level upsamples 2x first. The seed is a learnable constant (Baseline) or
// the coarsest positional grid (SsPe, MsPe). MsPe additionally adds
// gamma_l * PE_l after the activation of every scale.

#include "mspe/ops.hpp"
#include "mspe/pe.hpp"
#include "mspe/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mspe {

enum class GenMode { Baseline, SsPe, MsPe };

std::string to_string(GenMode mode);
/// Accepts "baseline", "ss-pe", "ms-pe".
GenMode parse_gen_mode(const std::string& name);

struct GeneratorConfig {
  GenMode mode = GenMode::MsPe;
  int base_h = 4;
  int base_w = 4;
  std::vector<int> channels{32, 32, 32, 16, 16};  // one entry per scale
  int image_channels = 3;
  int latent_dim = 32;
  Padding padding = Padding::Zero;
  bool noise_injection = true;
  float gamma_init = 1.0f;
  std::uint64_t seed = 0;

  int levels() const { return static_cast<int>(channels.size()); }
  int out_h() const { return base_h << (levels() - 1); }
  int out_w() const { return base_w << (levels() - 1); }
  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const;
};

struct GeneratorSpec {
  GeneratorConfig config;
  Tensor constant;                       // Baseline only: 1 x C0 x H x W
  std::vector<ConvParams> convs;         // per scale, 3x3
  std::vector<ConvParams> latent_proj;   // per scale, 1x1 from latent to channel bias
  std::vector<Tensor> noise_strength;    // per scale scalar
  std::vector<Tensor> gamma;             // MsPe only, one per scale
  ConvParams to_image;                   // 1x1

  std::vector<Tensor> parameters() const;
  /// Stable names for persistence.
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
};

GeneratorSpec make_generator(const GeneratorConfig& config);

struct SynthInputs {
  std::vector<Tensor> latents;                 // N x Z x 1 x 1; one shared or one per scale
  std::vector<Tensor> noise;                   // per scale N x 1 x H x W, empty or undefined for none
  std::optional<PEPyramid<float>> pyramid;
  Tensor constant;                             // optional Baseline seed override
};

/// Default inputs: pyramid at the native size and no noise.
SynthInputs make_inputs(const GeneratorSpec& spec, const Tensor& latents);
/// Standard normal latents, N x Z x 1 x 1.
Tensor sample_latents(const GeneratorSpec& spec, int n, std::uint64_t seed);
/// One N x 1 x H x W standard normal map per scale at the native sizes.
std::vector<Tensor> sample_noise(const GeneratorSpec& spec, int n, std::uint64_t seed);

Tensor synth_forward(const GeneratorSpec& spec, const SynthInputs& inputs);

/// MsPe only: synth_forward with the pyramid shifted by (dh, dw) image pixels.
Tensor shifted_generate(const GeneratorSpec& spec, const SynthInputs& inputs, double dh, double dw,
                        WrapMode wrap = WrapMode::Circular);

/// SsPe/MsPe: generation at H2 x W2 by resizing every pyramid level.
Tensor multiscale_generate(const GeneratorSpec& spec, const SynthInputs& inputs, int height, int width);

/// Tile/extend plan in image pixels. Segments index the native image grid.
struct ExpandPlan {
  std::vector<Segment> rows;
  std::vector<Segment> cols;
  double margin_h = 0.0;
  double margin_w = 0.0;

  bool empty() const { return rows.empty() && cols.empty() && margin_h == 0.0 && margin_w == 0.0; }
};

/// MsPe only: generation over a tiled and/or extended pyramid.
Tensor expanded_generate(const GeneratorSpec& spec, const SynthInputs& inputs, const ExpandPlan& plan);

/// The pyramid expanded_generate uses; exposed for inspection and tests.
PEPyramid<float> expand_pyramid(const PEPyramid<float>& p, const ExpandPlan& plan);

/// Per-pixel standard deviation over resampled noise maps, averaged over
/// image channels. Instance k draws its noise from seed + k.
Eigen::ArrayXXd noise_std_probe(const GeneratorSpec& spec, const SynthInputs& inputs, int n_instances,
                                std::uint64_t seed);
/// Same, with explicit per-instance seeds.
Eigen::ArrayXXd noise_std_probe(const GeneratorSpec& spec, const SynthInputs& inputs,
                                const std::vector<std::uint64_t>& seeds);

}  // namespace mspe
