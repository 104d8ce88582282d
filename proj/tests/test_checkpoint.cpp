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
#include "mspe/dataset.hpp"
#include "mspe/image_io.hpp"
#include "mspe/model_io.hpp"
#include "mspe/train.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

namespace mspe {
namespace {

Checkpoint sample() {
  Checkpoint c;
  c.config = {{"answer", 42}, {"name", "toy"}};
  c.add("a", "param", gaussian({2, 3, 4, 5}, 1, 0));
  c.add("empty", "param", Tensor::zeros({0, 1, 1, 1}));
  c.add("b", "state", Tensor::scalar(-0.0f));
  return c;
}

bool same_bits(const Eigen::ArrayXf& a, const Eigen::ArrayXf& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(float) * a.size()) == 0;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto c = sample();
  const auto bytes = encode_checkpoint(c);
  const auto d = decode_checkpoint(bytes);
  EXPECT_EQ(d.config, c.config);
  ASSERT_EQ(d.entries.size(), c.entries.size());
  for (std::size_t k = 0; k < c.entries.size(); ++k) {
    EXPECT_EQ(d.entries[k].name, c.entries[k].name);
    EXPECT_EQ(d.entries[k].kind, c.entries[k].kind);
    EXPECT_EQ(d.entries[k].shape, c.entries[k].shape);
    EXPECT_TRUE(same_bits(d.entries[k].data, c.entries[k].data));
  }
  EXPECT_EQ(encode_checkpoint(d), bytes);
  EXPECT_TRUE(std::signbit(d.tensor("b").item()));
  EXPECT_THROW(d.at("missing"), std::out_of_range);
  Checkpoint dup = c;
  EXPECT_THROW(dup.add("a", "param", Tensor::scalar(1)), std::invalid_argument);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "mspe_test.ckpt";
  save_checkpoint(path, sample());
  const auto d = load_checkpoint(path);
  EXPECT_TRUE(same_bits(d.at("a").data, sample().at("a").data));
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), FormatError);
}

TEST(Checkpoint, VersionMismatchNamesBothVersions) {
  auto bytes = encode_checkpoint(sample());
  bytes[4] = 7;
  try {
    decode_checkpoint(bytes);
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('7'), std::string::npos) << msg;
    EXPECT_NE(msg.find(std::to_string(kCheckpointVersion)), std::string::npos) << msg;
    EXPECT_EQ(e.offset(), 4u);
  }
}

TEST(Checkpoint, RejectsDamage) {
  const auto good = encode_checkpoint(sample());
  auto bad = good;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  for (std::size_t cut : {std::size_t{0}, std::size_t{11}, std::size_t{40}, good.size() - 1}) {
    EXPECT_THROW(decode_checkpoint(std::span(good.data(), cut)), FormatError) << cut;
  }
  bad = good;
  bad[12] = '[';  // manifest no longer an object with the expected keys
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
}

TEST(Checkpoint, RejectsOverlappingEntries) {
  nlohmann::json manifest = {{"config", nlohmann::json::object()},
                             {"entries",
                              {{{"name", "x"}, {"kind", "param"}, {"shape", {1, 1, 1, 2}}, {"dtype", "f32"},
                                {"offset", 0}, {"length", 8}},
                               {{"name", "y"}, {"kind", "param"}, {"shape", {1, 1, 1, 1}}, {"dtype", "f32"},
                                {"offset", 4}, {"length", 4}}}}};
  const std::string header = manifest.dump();
  std::vector<std::uint8_t> bytes{'M', 'S', 'P', 'E', 1, 0, 0, 0};
  const auto len = static_cast<std::uint32_t>(header.size());
  for (int k = 0; k < 4; ++k) bytes.push_back(static_cast<std::uint8_t>(len >> (8 * k)));
  bytes.insert(bytes.end(), header.begin(), header.end());
  bytes.resize(bytes.size() + 8, 0);
  EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(ModelIo, GeneratorRoundTripReproducesOutput) {
  GeneratorConfig cfg;
  cfg.mode = GenMode::MsPe;
  cfg.channels = {8, 8, 4};
  cfg.latent_dim = 5;
  cfg.padding = Padding::Circular;
  cfg.seed = 4;
  auto spec = make_generator(cfg);
  spec.gamma[1].data()[0] = 0.37f;
  const auto bytes = encode_checkpoint(save_generator(spec));
  const auto back = load_generator(decode_checkpoint(bytes));
  EXPECT_EQ(to_json(back.config), to_json(cfg));
  const auto in = make_inputs(spec, sample_latents(spec, 2, 3));
  EXPECT_TRUE(same_bits(synth_forward(back, in).data(), synth_forward(spec, in).data()));
  EXPECT_EQ(encode_checkpoint(save_generator(back)), bytes);
}

TEST(ModelIo, DenoiserRoundTrip) {
  DenoiserConfig cfg;
  cfg.size = 16;
  cfg.channels = {4, 8};
  cfg.time_dim = 8;
  cfg.time_hidden = 8;
  cfg.steps = 10;
  auto model = make_denoiser(cfg);
  model.conv_out.weight.data().setConstant(0.1f);
  const auto back = load_denoiser(decode_checkpoint(encode_checkpoint(save_denoiser(model))));
  const auto pyr = denoiser_pyramid(cfg);
  const Tensor x = gaussian({1, 1, 16, 16}, 2, 0);
  EXPECT_TRUE(same_bits(denoiser_forward(back, x, {3}, &pyr).data(), denoiser_forward(model, x, {3}, &pyr).data()));
}

TEST(ModelIo, KindAndShapeChecks) {
  GeneratorConfig cfg;
  cfg.channels = {4, 4};
  const auto ckpt = save_generator(make_generator(cfg));
  DenoiserConfig dcfg;
  EXPECT_THROW(load_denoiser(ckpt), std::invalid_argument);

  auto other = cfg;
  other.channels = {4, 8};
  auto spec = make_generator(other);
  EXPECT_THROW(restore_parameters(ckpt, spec.named_parameters()), std::invalid_argument);
  EXPECT_EQ(parse_padding(to_string(Padding::Circular)), Padding::Circular);
  EXPECT_THROW(parse_padding("mirror"), std::invalid_argument);
  EXPECT_EQ(parse_gen_mode("ss-pe"), GenMode::SsPe);
  EXPECT_THROW(parse_gen_mode("ms_pe"), std::invalid_argument);
}

TEST(ImageIo, PnmEncoding) {
  Tensor rgb = Tensor::zeros({1, 3, 1, 2});
  rgb.at(0, 0, 0, 0) = 1.0f;
  rgb.at(0, 1, 0, 0) = -1.0f;
  rgb.at(0, 2, 0, 1) = 2.0f;
  const std::string ppm = encode_pnm(rgb);
  ASSERT_EQ(ppm.substr(0, 11), "P6\n2 1\n255\n");
  EXPECT_EQ(static_cast<unsigned char>(ppm[11]), 255);
  EXPECT_EQ(static_cast<unsigned char>(ppm[12]), 0);
  EXPECT_EQ(static_cast<unsigned char>(ppm[16]), 255);  // clamped
  EXPECT_EQ(ppm.size(), 11u + 6u);
  const std::string pgm = encode_pnm(Tensor::zeros({2, 1, 2, 2}), 1);
  EXPECT_EQ(pgm.substr(0, 2), "P5");
  EXPECT_THROW(encode_pnm(Tensor::zeros({1, 2, 2, 2})), std::invalid_argument);
}

TEST(ImageIo, PnmDecodeInvertsEncode) {
  Tensor img = Tensor::zeros({1, 3, 3, 5});
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 5; ++j) img.at(0, c, i, j) = static_cast<float>(c * 15 + i * 5 + j) * 2.0f / 255.0f * 4 - 1;
  const std::string bytes = encode_pnm(img);
  const std::vector<std::uint8_t> raw(bytes.begin(), bytes.end());
  const Tensor back = decode_pnm(raw);
  ASSERT_EQ(back.shape(), img.shape());
  EXPECT_EQ(encode_pnm(back), bytes);
  const std::string commented("P5\n# note\n2 1\n255\n\x00\xff", 20);
  const Tensor gray = decode_pnm(std::vector<std::uint8_t>(commented.begin(), commented.end()));
  EXPECT_EQ(gray.at(0, 0, 0, 0), -1.0f);
  EXPECT_EQ(gray.at(0, 0, 0, 1), 1.0f);
  for (const std::string bad : {"P3\n1 1\n255\n0", "P5\n1 1\n65535\n00", "P5\n2 2\n255\n\x01", "P5\nx 1\n255\n0"}) {
    EXPECT_THROW(decode_pnm(std::vector<std::uint8_t>(bad.begin(), bad.end())), FormatError) << bad;
  }
}

TEST(Training, GeneratorRunsAreReproducible) {
  GeneratorConfig cfg;
  cfg.mode = GenMode::MsPe;
  cfg.channels = {8, 8, 8};
  cfg.latent_dim = 4;
  cfg.seed = 1;
  CanvasOptions opts;
  opts.canvas = 16;
  opts.patch = 8;
  const auto data = synth_glyphs(6, 2, opts);
  auto run = [&](std::vector<int> sizes) {
    auto spec = make_generator(cfg);
    auto state = make_latent_state(spec, 6, 3);
    GeneratorTrainOptions o;
    o.steps = 40;
    o.batch = 4;
    o.seed = 5;
    o.resize_sizes = sizes;
    const auto losses = train_generator(spec, state, data.images, o);
    return std::pair{losses, encode_checkpoint(save_generator(spec))};
  };
  const auto a = run({}), b = run({});
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_LT(a.first.back(), a.first.front());
  const auto r = run({8, 16, 24});
  EXPECT_EQ(r.first.size(), 40u);
  EXPECT_NE(r.second, a.second);
}

TEST(Training, BatchSampling) {
  const auto a = sample_batch(10, 32, 1, 0);
  EXPECT_EQ(a.size(), 32u);
  for (int i : a) EXPECT_TRUE(i >= 0 && i < 10);
  EXPECT_EQ(a, sample_batch(10, 32, 1, 0));
  EXPECT_NE(a, sample_batch(10, 32, 1, 1));
}

}  // namespace
}  // namespace mspe
