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

// Verb implementations for the mspe command-line tool. Each verb takes a
// plain options struct filled by the argument parser, echoes the resolved
// options as JSON and returns a process exit code.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mspe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

struct GlobalOptions {
  bool deterministic = false;
  bool quiet = false;
};

struct BuildPeOptions {
  int height = 4;
  int width = 4;
  int channels = 64;
  int levels = 1;
  std::vector<double> shift{0.0, 0.0};
  std::string wrap = "circular";
  int heatmap_channel = 0;
  std::filesystem::path out = "pe_out";
};

struct BuildDatasetOptions {
  std::string source = "synthetic";
  std::filesystem::path images;  // default $MSPE_DATA_DIR/train-images-idx3-ubyte
  std::filesystem::path labels;  // default $MSPE_DATA_DIR/train-labels-idx1-ubyte
  int count = 256;
  int canvas = 64;
  int patch = 32;
  int channels = 3;
  int top = 0;
  int left = 0;
  std::uint64_t seed = 1;
  int preview = 8;
  std::filesystem::path out = "dataset_out";
};

struct TrainOptions {
  std::string model = "generator";
  std::string mode = "ms-pe";
  std::filesystem::path dataset;  // empty: synthetic glyphs sized for the model
  int count = 128;
  std::uint64_t data_seed = 1;
  std::string padding = "zero";
  std::vector<int> channels;  // empty: per-model default
  int steps = 600;
  int batch = 16;
  float lr = 2e-3f;
  std::uint64_t seed = 0;
  int log_every = 0;
  // Generator.
  int base = 4;
  int latent_dim = 32;
  bool no_noise = false;
  bool resample_noise = false;
  std::vector<int> resize;
  // Denoiser.
  int size = 32;
  int timesteps = 200;
  double beta_start = 1e-3;
  double beta_end = 0.05;
  float clip_norm = 1.0f;
  std::filesystem::path out = "train_out";
};

struct GenerateOptions {
  std::filesystem::path checkpoint;
  int count = 4;
  std::uint64_t seed = 0;
  std::string latents = "random";
  std::optional<std::vector<double>> shift;
  std::optional<std::vector<int>> size;
  std::string expand;
  std::optional<int> reconstruct;
  std::filesystem::path dataset;  // reconstruction inputs; empty: synthetic glyphs
  std::uint64_t data_seed = 1;
  std::filesystem::path out = "generate_out";
};

struct ReportOptions {
  std::vector<std::filesystem::path> checkpoints;
  int max_shift = 0;  // 0: one full period
  int latents = 8;
  std::string latent_source = "train";
  std::uint64_t seed = 0;
  int noise_instances = 100;
  std::vector<std::filesystem::path> compare;
  std::vector<std::filesystem::path> quadrants;
  std::filesystem::path out = "report_out";
};

struct VerifyOptions {
  std::vector<int> only;
};

int build_pe(const GlobalOptions& g, const BuildPeOptions& o);
int build_dataset(const GlobalOptions& g, const BuildDatasetOptions& o);
int train(const GlobalOptions& g, const TrainOptions& o);
int generate(const GlobalOptions& g, const GenerateOptions& o);
int report(const GlobalOptions& g, const ReportOptions& o);
int verify(const GlobalOptions& g, const VerifyOptions& o);

/// "rows=0:16,0:16;cols=0:32;margin=4,8" with every part optional.
struct ExpandSpec {
  std::vector<std::pair<double, double>> rows, cols;
  double margin_h = 0.0, margin_w = 0.0;
};
ExpandSpec parse_expand(const std::string& text);

}  // namespace mspe::cli
