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

#include "mspe/train.hpp"

#include "mspe/random.hpp"

#include <stdexcept>

namespace mspe {

std::vector<int> sample_batch(int n, int batch, std::uint64_t seed, std::uint64_t step) {
  if (n < 1 || batch < 1) throw std::invalid_argument("sample_batch needs n, batch >= 1");
  Philox rng(seed ^ 0x5eedba7c4ULL, step);
  std::vector<int> idx(batch);
  for (int& i : idx) i = static_cast<int>(rng.below(static_cast<std::uint32_t>(n)));
  return idx;
}

LatentState make_latent_state(const GeneratorSpec& spec, int n, std::uint64_t seed) {
  LatentState s;
  s.codes = sample_latents(spec, n, seed);
  s.codes.set_requires_grad(true);
  if (spec.config.noise_injection) s.noise = sample_noise(spec, n, seed + 1);
  return s;
}

SynthInputs latent_inputs(const GeneratorSpec& spec, const LatentState& state, const std::vector<int>& index) {
  SynthInputs in = make_inputs(spec, gather_batch(state.codes, index));
  for (const auto& nz : state.noise) in.noise.push_back(gather_batch(nz, index));
  return in;
}

std::vector<float> train_generator(GeneratorSpec& spec, LatentState& state, const Tensor& images,
                                   const GeneratorTrainOptions& opts, const ProgressFn& progress) {
  const auto& cfg = spec.config;
  const Shape is = images.shape();
  if (is.c != cfg.image_channels || is.h != cfg.out_h() || is.w != cfg.out_w()) {
    throw std::invalid_argument("train_generator: images " + is.str() + " do not match the generator output");
  }
  if (state.codes.shape().n != is.n) throw std::invalid_argument("train_generator: one latent code per image needed");
  for (int s : opts.resize_sizes) {
    if (s % (1 << (cfg.levels() - 1)) != 0) {
      throw std::invalid_argument("train_generator: resize size " + std::to_string(s) + " is not dyadic-compatible");
    }
  }
  if (!opts.resize_sizes.empty() && cfg.mode == GenMode::Baseline) {
    throw std::invalid_argument("train_generator: random resizing needs a positional mode");
  }

  std::vector<Tensor> params = spec.parameters();
  params.push_back(state.codes);
  Adam adam(params, {.lr = opts.lr});
  std::vector<float> losses;
  for (int step = 0; step < opts.steps; ++step) {
    const auto idx = sample_batch(is.n, opts.batch, opts.seed, static_cast<std::uint64_t>(step));
    SynthInputs in = latent_inputs(spec, state, idx);
    if (opts.resample_noise && cfg.noise_injection) {
      in.noise = sample_noise(spec, opts.batch, opts.seed + 7919ULL * (static_cast<std::uint64_t>(step) + 1));
    }
    Tensor out;
    if (opts.resize_sizes.empty()) {
      out = synth_forward(spec, in);
    } else {
      Philox rng(opts.seed, 1ULL << 40 | static_cast<std::uint64_t>(step));
      const int h2 = opts.resize_sizes[rng.below(static_cast<std::uint32_t>(opts.resize_sizes.size()))];
      const int w2 = h2 * cfg.out_w() / cfg.out_h();
      out = resize_bilinear(multiscale_generate(spec, in, h2, w2), cfg.out_h(), cfg.out_w());
    }
    adam.zero_grad();
    const Tensor loss = mse_loss(out, gather_batch(images, idx));
    check_finite(loss, "generator loss");
    backward(loss);
    adam.step();
    losses.push_back(loss.item());
    if (progress) progress(step, loss.item());
  }
  return losses;
}

std::vector<float> train_denoiser(Denoiser& model, const Tensor& images, const BetaSchedule& sched,
                                  const DiffusionTrainOptions& opts, const ProgressFn& progress) {
  if (model.config.steps != sched.T) throw std::invalid_argument("train_denoiser: model and schedule disagree on T");
  const PEPyramid<float> pyramid = denoiser_pyramid(model.config);
  const PEPyramid<float>* pe = model.config.use_pe ? &pyramid : nullptr;
  Adam adam(model.parameters(), {.lr = opts.lr, .clip_norm = opts.clip_norm});
  std::vector<float> losses;
  for (int step = 0; step < opts.steps; ++step) {
    const auto idx = sample_batch(images.shape().n, opts.batch, opts.seed, static_cast<std::uint64_t>(step));
    const float loss =
        train_step(model, gather_batch(images, idx), sched, adam, pe, opts.seed, static_cast<std::uint64_t>(step));
    losses.push_back(loss);
    if (progress) progress(step, loss);
  }
  return losses;
}

}  // namespace mspe
