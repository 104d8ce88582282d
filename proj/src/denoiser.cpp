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

#include "mspe/denoiser.hpp"

#include <stdexcept>

namespace mspe {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

ResBlock make_block(int cin, int cout, const DenoiserConfig& cfg, std::uint64_t& stream) {
  ResBlock b;
  b.conv1 = make_conv(cin, cout, 3, cfg.padding, cfg.seed, stream++);
  b.conv2 = make_conv(cout, cout, 3, cfg.padding, cfg.seed, stream++);
  if (cin != cout) b.skip = make_conv(cin, cout, 1, cfg.padding, cfg.seed, stream++);
  b.time_proj = make_conv(cfg.time_hidden, cout, 1, Padding::Zero, cfg.seed, stream++);
  return b;
}

Tensor run_block(const ResBlock& b, const Tensor& x, const Tensor& temb) {
  Tensor h = conv2d(leaky_relu(x), b.conv1);
  h = leaky_relu(add_channel_bias(h, conv2d(temb, b.time_proj)));
  h = conv2d(h, b.conv2);
  return add(b.skip.weight.defined() ? conv2d(x, b.skip) : x, h);
}

void add_block(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix, const ResBlock& b) {
  out.emplace_back(prefix + ".conv1.weight", b.conv1.weight);
  out.emplace_back(prefix + ".conv1.bias", b.conv1.bias);
  out.emplace_back(prefix + ".conv2.weight", b.conv2.weight);
  out.emplace_back(prefix + ".conv2.bias", b.conv2.bias);
  if (b.skip.weight.defined()) {
    out.emplace_back(prefix + ".skip.weight", b.skip.weight);
    out.emplace_back(prefix + ".skip.bias", b.skip.bias);
  }
  out.emplace_back(prefix + ".time.weight", b.time_proj.weight);
  out.emplace_back(prefix + ".time.bias", b.time_proj.bias);
}

Tensor time_embedding(const std::vector<int>& t, int dim) {
  const int n = static_cast<int>(t.size());
  Eigen::ArrayXf values(static_cast<Eigen::Index>(n) * dim);
  for (int i = 0; i < n; ++i) values.segment(static_cast<Eigen::Index>(i) * dim, dim) = encode_axis<float>(t[i], dim / 2);
  return Tensor::from_array({n, dim, 1, 1}, std::move(values));
}

}  // namespace

void DenoiserConfig::validate() const {
  require(!channels.empty(), "denoiser needs at least one resolution");
  require(size >= 1 && size % (1 << (levels() - 1)) == 0,
          "denoiser size must be divisible by 2^(levels-1)");
  require(image_channels >= 1, "denoiser needs image channels >= 1");
  require(time_dim >= 2 && time_dim % 2 == 0, "denoiser time_dim must be even");
  require(time_hidden >= 1 && steps >= 1, "denoiser time_hidden and steps must be positive");
  for (int c : channels) require(c >= 4 && c % 4 == 0, "denoiser channels must be divisible by 4");
}

std::vector<std::pair<std::string, Tensor>> Denoiser::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("conv_in.weight", conv_in.weight);
  out.emplace_back("conv_in.bias", conv_in.bias);
  out.emplace_back("time_mlp.weight", time_mlp.weight);
  out.emplace_back("time_mlp.bias", time_mlp.bias);
  for (std::size_t k = 0; k < down.size(); ++k) add_block(out, "down" + std::to_string(k), down[k]);
  for (std::size_t k = 0; k < up.size(); ++k) add_block(out, "up" + std::to_string(k), up[k]);
  for (std::size_t k = 0; k < gamma_down.size(); ++k) out.emplace_back("gamma_down" + std::to_string(k), gamma_down[k]);
  for (std::size_t k = 0; k < gamma_up.size(); ++k) out.emplace_back("gamma_up" + std::to_string(k), gamma_up[k]);
  out.emplace_back("conv_out.weight", conv_out.weight);
  out.emplace_back("conv_out.bias", conv_out.bias);
  return out;
}

std::vector<Tensor> Denoiser::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

Denoiser make_denoiser(const DenoiserConfig& cfg) {
  cfg.validate();
  Denoiser m;
  m.config = cfg;
  std::uint64_t stream = 1;
  const auto& ch = cfg.channels;
  const int K = cfg.levels();
  m.conv_in = make_conv(cfg.image_channels, ch[0], 3, cfg.padding, cfg.seed, stream++);
  m.time_mlp = make_conv(cfg.time_dim, cfg.time_hidden, 1, Padding::Zero, cfg.seed, stream++);
  for (int k = 0; k < K; ++k) m.down.push_back(make_block(k == 0 ? ch[0] : ch[k - 1], ch[k], cfg, stream));
  for (int k = 0; k + 1 < K; ++k) m.up.push_back(make_block(ch[k + 1] + ch[k], ch[k], cfg, stream));
  if (cfg.use_pe) {
    for (int k = 0; k < K; ++k) m.gamma_down.push_back(Tensor::scalar(cfg.gamma_init, true));
    for (int k = 0; k + 1 < K; ++k) m.gamma_up.push_back(Tensor::scalar(cfg.gamma_init, true));
  }
  m.conv_out = make_conv(ch[0], cfg.image_channels, 3, cfg.padding, cfg.seed, stream++);
  m.conv_out.weight.data().setZero();
  return m;
}

PEPyramid<float> denoiser_pyramid(const DenoiserConfig& cfg) {
  const int K = cfg.levels();
  std::vector<int> coarse_first(cfg.channels.rbegin(), cfg.channels.rend());
  const int base = cfg.size >> (K - 1);
  return build_pyramid<float>(base, base, coarse_first);
}

Tensor denoiser_forward(const Denoiser& model, const Tensor& x_t, const std::vector<int>& t,
                        const PEPyramid<float>* pyramid) {
  const auto& cfg = model.config;
  const int K = cfg.levels();
  const Shape s = x_t.shape();
  require(s.c == cfg.image_channels && s.h == cfg.size && s.w == cfg.size,
          "denoiser_forward: input shape " + s.str() + " does not match the configuration");
  require(static_cast<int>(t.size()) == s.n, "denoiser_forward: need one timestep per sample");
  for (int ti : t) {
    require(ti >= 1 && ti <= cfg.steps, "denoiser_forward: timestep " + std::to_string(ti) + " outside [1, " +
                                            std::to_string(cfg.steps) + "]");
  }
  if (cfg.use_pe) {
    require(pyramid != nullptr && pyramid->num_levels() == K, "denoiser_forward: needs a " +
                                                                  std::to_string(K) + "-level pyramid");
  }
  auto pe_at = [&](int k) -> const PEGrid<float>& { return pyramid->levels[K - 1 - k]; };

  const Tensor temb = leaky_relu(conv2d(time_embedding(t, cfg.time_dim), model.time_mlp));
  Tensor h = conv2d(x_t, model.conv_in);
  std::vector<Tensor> skips;
  for (int k = 0; k < K; ++k) {
    if (k > 0) h = avg_pool2(h);
    h = run_block(model.down[k], h, temb);
    if (cfg.use_pe) h = add_scaled_pe(h, model.gamma_down[k], pe_at(k));
    skips.push_back(h);
  }
  for (int k = K - 2; k >= 0; --k) {
    h = concat_channels(upsample2x_blur(h, cfg.padding), skips[k]);
    h = run_block(model.up[k], h, temb);
    if (cfg.use_pe) h = add_scaled_pe(h, model.gamma_up[k], pe_at(k));
  }
  return conv2d(leaky_relu(h), model.conv_out);
}

}  // namespace mspe
