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

#include "mspe/generator.hpp"

#include <cmath>
#include <stdexcept>

namespace mspe {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool has_noise(const SynthInputs& in, int l) {
  return l < static_cast<int>(in.noise.size()) && in.noise[l].defined();
}

const Tensor& latent_for(const SynthInputs& in, int l) {
  return in.latents.size() == 1 ? in.latents[0] : in.latents[l];
}

// Scales an image-pixel quantity to level idx (0-based, coarsest first).
double to_level(double v, int idx, int L) { return std::ldexp(v, idx + 1 - L); }

double exact_integer(double v, const char* what) {
  const double r = std::round(v);
  require(std::abs(v - r) < 1e-9, std::string("expand plan: ") + what + " is not integral at every scale");
  return r;
}

}  // namespace

std::string to_string(GenMode mode) {
  switch (mode) {
    case GenMode::Baseline: return "baseline";
    case GenMode::SsPe: return "ss-pe";
    case GenMode::MsPe: return "ms-pe";
  }
  return "?";
}

GenMode parse_gen_mode(const std::string& name) {
  if (name == "baseline") return GenMode::Baseline;
  if (name == "ss-pe") return GenMode::SsPe;
  if (name == "ms-pe") return GenMode::MsPe;
  throw std::invalid_argument("unknown mode '" + name + "' (expected baseline, ss-pe or ms-pe)");
}

void GeneratorConfig::validate() const {
  require(!channels.empty(), "generator needs at least one scale");
  require(base_h >= 1 && base_w >= 1, "generator base size must be positive");
  require(image_channels >= 1 && latent_dim >= 1, "generator needs image and latent channels >= 1");
  for (int c : channels) {
    require(c >= 4 && c % 4 == 0, "generator channels must be divisible by 4 (got " + std::to_string(c) + ")");
  }
}

std::vector<Tensor> GeneratorSpec::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::vector<std::pair<std::string, Tensor>> GeneratorSpec::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  if (constant.defined()) out.emplace_back("const", constant);
  for (std::size_t l = 0; l < convs.size(); ++l) {
    const std::string s = std::to_string(l);
    out.emplace_back("conv" + s + ".weight", convs[l].weight);
    out.emplace_back("conv" + s + ".bias", convs[l].bias);
    out.emplace_back("latent" + s + ".weight", latent_proj[l].weight);
    out.emplace_back("latent" + s + ".bias", latent_proj[l].bias);
    if (config.noise_injection) out.emplace_back("noise" + s, noise_strength[l]);
    if (!gamma.empty()) out.emplace_back("gamma" + s, gamma[l]);
  }
  out.emplace_back("to_image.weight", to_image.weight);
  out.emplace_back("to_image.bias", to_image.bias);
  return out;
}

GeneratorSpec make_generator(const GeneratorConfig& config) {
  config.validate();
  GeneratorSpec spec;
  spec.config = config;
  const int L = config.levels();
  std::uint64_t stream = 1;
  if (config.mode == GenMode::Baseline) {
    spec.constant = gaussian({1, config.channels[0], config.base_h, config.base_w}, config.seed, stream++);
    spec.constant.set_requires_grad(true);
  }
  int prev = config.channels[0];
  for (int l = 0; l < L; ++l) {
    const int c = config.channels[l];
    spec.convs.push_back(make_conv(prev, c, 3, config.padding, config.seed, stream++));
    spec.latent_proj.push_back(make_conv(config.latent_dim, c, 1, Padding::Zero, config.seed, stream++));
    spec.noise_strength.push_back(Tensor::scalar(0.0f, config.noise_injection));
    if (config.mode == GenMode::MsPe) spec.gamma.push_back(Tensor::scalar(config.gamma_init, true));
    prev = c;
  }
  spec.to_image = make_conv(prev, config.image_channels, 1, Padding::Zero, config.seed, stream++);
  return spec;
}

SynthInputs make_inputs(const GeneratorSpec& spec, const Tensor& latents) {
  SynthInputs in;
  in.latents = {latents};
  const auto& cfg = spec.config;
  if (cfg.mode == GenMode::MsPe) {
    in.pyramid = build_pyramid<float>(cfg.base_h, cfg.base_w, cfg.channels);
  } else if (cfg.mode == GenMode::SsPe) {
    in.pyramid = build_pyramid<float>(cfg.base_h, cfg.base_w, {cfg.channels[0]});
  }
  return in;
}

Tensor sample_latents(const GeneratorSpec& spec, int n, std::uint64_t seed) {
  return gaussian({n, spec.config.latent_dim, 1, 1}, seed, 0);
}

std::vector<Tensor> sample_noise(const GeneratorSpec& spec, int n, std::uint64_t seed) {
  std::vector<Tensor> out;
  for (int l = 0; l < spec.config.levels(); ++l) {
    out.push_back(gaussian({n, 1, spec.config.base_h << l, spec.config.base_w << l}, seed, 100 + l));
  }
  return out;
}

Tensor synth_forward(const GeneratorSpec& spec, const SynthInputs& inputs) {
  const auto& cfg = spec.config;
  const int L = cfg.levels();
  require(!inputs.latents.empty(), "synth_forward: no latents");
  require(inputs.latents.size() == 1 || static_cast<int>(inputs.latents.size()) == L,
          "synth_forward: expected 1 or " + std::to_string(L) + " latent tensors");
  const int n = inputs.latents[0].shape().n;
  for (const auto& z : inputs.latents) {
    require(z.shape() == Shape{n, cfg.latent_dim, 1, 1}, "synth_forward: latent shape " + z.shape().str());
  }

  Tensor h;
  if (cfg.mode == GenMode::Baseline) {
    const Tensor& c = inputs.constant.defined() ? inputs.constant : spec.constant;
    require(c.shape().n == 1 && c.shape().c == cfg.channels[0], "synth_forward: constant shape " + c.shape().str());
    h = repeat_batch(c, n);
  } else {
    require(inputs.pyramid && inputs.pyramid->num_levels() >= 1, "synth_forward: missing positional pyramid");
    if (cfg.mode == GenMode::MsPe) {
      require(inputs.pyramid->num_levels() == L, "synth_forward: MS-PE needs " + std::to_string(L) +
                                                     " pyramid levels, got " +
                                                     std::to_string(inputs.pyramid->num_levels()));
    }
    const auto& pe0 = inputs.pyramid->levels[0];
    require(pe0.channels == cfg.channels[0], "synth_forward: PE^0 channel count mismatch");
    h = repeat_batch(to_tensor(pe0), n);
  }

  for (int l = 0; l < L; ++l) {
    if (l > 0) h = upsample2x_blur(h, cfg.padding);
    h = conv2d(h, spec.convs[l]);
    h = add_channel_bias(h, conv2d(latent_for(inputs, l), spec.latent_proj[l]));
    if (cfg.noise_injection && has_noise(inputs, l)) {
      const Shape ns = inputs.noise[l].shape();
      require(ns.n == n && ns.c == 1 && ns.h == h.shape().h && ns.w == h.shape().w,
              "synth_forward: noise at scale " + std::to_string(l) + " has shape " + ns.str() +
                  ", features are " + h.shape().str());
      h = add_noise(h, spec.noise_strength[l], inputs.noise[l]);
    }
    h = leaky_relu(h);
    if (cfg.mode == GenMode::MsPe) {
      const auto& pe = inputs.pyramid->levels[l];
      require(pe.height == h.shape().h && pe.width == h.shape().w,
              "synth_forward: PE level " + std::to_string(l) + " does not match feature size");
      h = add_scaled_pe(h, spec.gamma[l], pe);
    }
  }
  return conv2d(h, spec.to_image);
}

Tensor shifted_generate(const GeneratorSpec& spec, const SynthInputs& inputs, double dh, double dw,
                        WrapMode wrap) {
  require(spec.config.mode == GenMode::MsPe, "shifted_generate requires MS-PE mode");
  require(inputs.pyramid.has_value(), "shifted_generate: missing positional pyramid");
  SynthInputs shifted = inputs;
  shifted.pyramid = shift_pyramid(*inputs.pyramid, dh, dw, wrap);
  return synth_forward(spec, shifted);
}

Tensor multiscale_generate(const GeneratorSpec& spec, const SynthInputs& inputs, int height, int width) {
  const auto& cfg = spec.config;
  require(cfg.mode != GenMode::Baseline, "multiscale_generate requires SS-PE or MS-PE mode");
  require(inputs.pyramid.has_value(), "multiscale_generate: missing positional pyramid");
  const int L = cfg.levels();
  const int step = 1 << (L - 1);
  require(height >= step && width >= step && height % step == 0 && width % step == 0,
          "multiscale_generate: " + std::to_string(height) + "x" + std::to_string(width) +
              " is not a multiple of " + std::to_string(step) + " at every scale");
  if (height == cfg.out_h() && width == cfg.out_w()) return synth_forward(spec, inputs);

  SynthInputs scaled = inputs;
  for (int l = 0; l < scaled.pyramid->num_levels(); ++l) {
    auto& g = scaled.pyramid->levels[l];
    g = resize_grid(g, height >> (L - 1 - l), width >> (L - 1 - l));
  }
  for (int l = 0; l < static_cast<int>(scaled.noise.size()); ++l) {
    if (scaled.noise[l].defined()) {
      scaled.noise[l] = resize_bilinear(scaled.noise[l], height >> (L - 1 - l), width >> (L - 1 - l));
    }
  }
  return synth_forward(spec, scaled);
}

PEPyramid<float> expand_pyramid(const PEPyramid<float>& p, const ExpandPlan& plan) {
  const int L = p.num_levels();
  PEPyramid<float> out = p;
  for (int l = 0; l < L; ++l) {
    const auto& g = p.levels[l];
    auto scaled = [&](const std::vector<Segment>& segs, const std::vector<double>& axis) {
      if (segs.empty()) return axis;
      std::vector<Segment> s;
      for (const auto& seg : segs) {
        s.push_back({exact_integer(to_level(seg.begin, l, L), "segment start"),
                     exact_integer(to_level(seg.end, l, L), "segment end")});
      }
      return detail::concat_segments(s, "plan");
    };
    auto tiled = evaluate_grid<float>(g.channels, scaled(plan.rows, g.row_coords), scaled(plan.cols, g.col_coords),
                                      g.wrap_period_h, g.wrap_period_w);
    out.levels[l] = extend_grid(tiled, exact_integer(to_level(plan.margin_h, l, L), "row margin"),
                                exact_integer(to_level(plan.margin_w, l, L), "column margin"));
  }
  return out;
}

Tensor expanded_generate(const GeneratorSpec& spec, const SynthInputs& inputs, const ExpandPlan& plan) {
  require(spec.config.mode == GenMode::MsPe, "expanded_generate requires MS-PE mode");
  require(inputs.pyramid.has_value(), "expanded_generate: missing positional pyramid");
  if (plan.empty()) return synth_forward(spec, inputs);
  SynthInputs expanded = inputs;
  expanded.pyramid = expand_pyramid(*inputs.pyramid, plan);
  return synth_forward(spec, expanded);
}

Eigen::ArrayXXd noise_std_probe(const GeneratorSpec& spec, const SynthInputs& inputs, int n_instances,
                                std::uint64_t seed) {
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < n_instances; ++k) seeds.push_back(seed + static_cast<std::uint64_t>(k));
  return noise_std_probe(spec, inputs, seeds);
}

Eigen::ArrayXXd noise_std_probe(const GeneratorSpec& spec, const SynthInputs& inputs,
                                const std::vector<std::uint64_t>& seeds) {
  require(seeds.size() >= 2, "noise_std_probe needs at least two instances");
  const auto& cfg = spec.config;
  const int L = cfg.levels();
  const int n = inputs.latents.at(0).shape().n;

  // Feature sizes follow the pyramid when one is given.
  std::vector<std::pair<int, int>> sizes;
  for (int l = 0; l < L; ++l) {
    if (inputs.pyramid && l < inputs.pyramid->num_levels()) {
      sizes.emplace_back(inputs.pyramid->levels[l].height, inputs.pyramid->levels[l].width);
    } else if (inputs.pyramid) {
      sizes.emplace_back(inputs.pyramid->levels[0].height << l, inputs.pyramid->levels[0].width << l);
    } else {
      sizes.emplace_back(cfg.base_h << l, cfg.base_w << l);
    }
  }

  Eigen::ArrayXd mean, m2;
  Shape shape;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    SynthInputs in = inputs;
    in.noise.clear();
    for (int l = 0; l < L; ++l) in.noise.push_back(gaussian({n, 1, sizes[l].first, sizes[l].second}, seeds[k], 100 + l));
    const Tensor img = synth_forward(spec, in);
    const Eigen::ArrayXd x = img.data().cast<double>();
    if (k == 0) {
      shape = img.shape();
      mean = Eigen::ArrayXd::Zero(x.size());
      m2 = Eigen::ArrayXd::Zero(x.size());
    }
    const Eigen::ArrayXd delta = x - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (x - mean);
  }
  const Eigen::ArrayXd stddev = (m2 / static_cast<double>(seeds.size() - 1)).sqrt();
  Eigen::ArrayXXd map = Eigen::ArrayXXd::Zero(shape.h, shape.w);
  for (int b = 0; b < shape.n * shape.c; ++b) {
    for (int i = 0; i < shape.h; ++i)
      for (int j = 0; j < shape.w; ++j) map(i, j) += stddev[(static_cast<std::int64_t>(b) * shape.h + i) * shape.w + j];
  }
  return map / static_cast<double>(shape.n * shape.c);
}

}  // namespace mspe
