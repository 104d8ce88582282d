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

// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. The first argument, when given, is the
// path of the command-line tool used by the persistence criterion.

#include "mspe/bias_eval.hpp"
#include "mspe/checkpoint.hpp"
#include "mspe/dataset.hpp"
#include "mspe/model_io.hpp"
#include "mspe/runtime.hpp"
#include "mspe/train.hpp"
#include "mspe/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace mspe;

namespace {

// Toy synthesis stacks: 64x64 colored glyphs in the upper-left 32x32 patch.
constexpr int kGenImages = 128;
constexpr int kGenSteps = 600;
constexpr int kProbeLatents = 8;
constexpr int kNoiseInstances = 100;
constexpr Padding kGenPadding = Padding::Circular;

// Toy diffusion: 32x32 gray glyphs in the upper-left 16x16 patch.
constexpr int kDiffImages = 512;
constexpr int kDiffSteps = 2000;
constexpr int kDiffT = 200;
constexpr int kTEnc = 180;
constexpr int kReconstructions = 64;

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[400];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct TrainedStacks {
  std::map<GenMode, GeneratorSpec> spec;
  std::map<GenMode, SynthInputs> inputs;
  std::map<GenMode, double> seconds;
};

const TrainedStacks& trained_stacks() {
  static const TrainedStacks stacks = [] {
    TrainedStacks s;
    const auto data = synth_glyphs(kGenImages, 1);
    for (GenMode mode : {GenMode::Baseline, GenMode::SsPe, GenMode::MsPe}) {
      const auto t0 = std::chrono::steady_clock::now();
      GeneratorConfig cfg;
      cfg.mode = mode;
      cfg.padding = kGenPadding;
      cfg.seed = 3;
      GeneratorSpec spec = make_generator(cfg);
      LatentState state = make_latent_state(spec, kGenImages, 5);
      GeneratorTrainOptions o;
      o.steps = kGenSteps;
      o.seed = 9;
      train_generator(spec, state, data.images, o);
      std::vector<int> idx(kProbeLatents);
      for (int k = 0; k < kProbeLatents; ++k) idx[k] = k;
      s.inputs[mode] = latent_inputs(spec, state, idx);
      s.spec.emplace(mode, std::move(spec));
      s.seconds[mode] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return s;
  }();
  return stacks;
}

CheckResult criterion_diffusion_bias() {
  return timed_check(8, "shifted pyramid moves diffusion reconstructions", [](std::string& detail) {
    CanvasOptions co;
    co.canvas = 32;
    co.patch = 16;
    co.channels = 1;
    const auto data = synth_glyphs(kDiffImages, 1, co);
    const BetaSchedule sched = make_beta_schedule(kDiffT, 1e-3, 0.05);
    std::vector<int> idx(kReconstructions);
    for (int k = 0; k < kReconstructions; ++k) idx[k] = k;
    const Tensor x0 = gather_batch(data.images, idx);

    double bl[2] = {0, 0}, secs[2] = {0, 0};
    for (int use_pe : {1, 0}) {
      const auto t0 = std::chrono::steady_clock::now();
      DenoiserConfig cfg;
      cfg.steps = kDiffT;
      cfg.use_pe = use_pe;
      cfg.seed = 4;
      Denoiser model = make_denoiser(cfg);
      DiffusionTrainOptions o;
      o.steps = kDiffSteps;
      o.seed = 6;
      train_denoiser(model, data.images, sched, o);
      const auto shifted = shift_pyramid(denoiser_pyramid(cfg), co.canvas / 2.0, 0.0, WrapMode::Circular);
      const Tensor rec = stochastic_reconstruct(x0, kTEnc, predictor(model, use_pe ? &shifted : nullptr), sched, 11);
      for (int n = 0; n < kReconstructions; ++n) bl[use_pe] += quadrant_mass(gray_map(rec, n))[2] / kReconstructions;
      secs[use_pe] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    detail = fmt("bottom-left mass %.3f with positional encoding vs %.3f baseline (need >= 2x)", bl[1], bl[0]) +
             fmt("; %d reconstructions from t_enc %d of T %d", kReconstructions, kTEnc, kDiffT) +
             fmt("; training %.0f s and %.0f s", secs[1], secs[0]);
    return bl[1] >= 2.0 * bl[0];
  });
}

CheckResult criterion_shift_curves() {
  return timed_check(9, "shift-consistency curve above baseline", [](std::string& detail) {
    const auto& s = trained_stacks();
    const int period = s.spec.at(GenMode::MsPe).config.out_h();
    std::vector<double> shifts;
    for (int k = 1; k <= period; ++k) shifts.push_back(k);
    const auto ms = shift_consistency_curve(s.spec.at(GenMode::MsPe), s.inputs.at(GenMode::MsPe), shifts);
    const auto base = shift_consistency_curve(s.spec.at(GenMode::Baseline), s.inputs.at(GenMode::Baseline), shifts);
    const double zero = shift_consistency_curve(s.spec.at(GenMode::MsPe), s.inputs.at(GenMode::MsPe), {0.0})
                            .similarities[0];
    double mean = 0;
    std::vector<int> below;
    for (std::size_t k = 0; k < shifts.size(); ++k) {
      mean += ms.similarities[k] / static_cast<double>(shifts.size());
      if (static_cast<int>(shifts[k]) % 16 != 0 && !(ms.similarities[k] > base.similarities[k])) {
        below.push_back(static_cast<int>(shifts[k]));
      }
    }
    std::ostringstream os;
    os << fmt("mean similarity %.3f (need >= %.3f)", mean, 0.8 * zero) << "; not above baseline at "
       << below.size() << " of " << shifts.size() - shifts.size() / 16 << " non-lattice shifts";
    if (!below.empty()) {
      os << " (";
      for (std::size_t k = 0; k < below.size() && k < 8; ++k) {
        const int sh = below[k];
        os << (k ? ", " : "") << sh << fmt(": %.3f vs %.3f", ms.similarities[sh - 1], base.similarities[sh - 1]);
      }
      os << (below.size() > 8 ? ", ..." : "") << ")";
    }
    detail = os.str();
    return mean >= 0.8 * zero && below.empty();
  });
}

CheckResult criterion_noise_probe() {
  return timed_check(10, "noise-std probe orders SS-PE highest", [](std::string& detail) {
    const auto& s = trained_stacks();
    std::map<GenMode, double> std_mean;
    for (GenMode mode : {GenMode::Baseline, GenMode::SsPe, GenMode::MsPe}) {
      std_mean[mode] = noise_std_probe(s.spec.at(mode), s.inputs.at(mode), kNoiseInstances, 77).mean();
    }
    detail = fmt("mean per-pixel std over %d noise draws: ss-pe %.5f, ms-pe %.5f", kNoiseInstances,
                 std_mean[GenMode::SsPe], std_mean[GenMode::MsPe]) +
             fmt(", baseline %.5f; stack training %.0f s", std_mean[GenMode::Baseline],
                 s.seconds.at(GenMode::Baseline) + s.seconds.at(GenMode::SsPe) + s.seconds.at(GenMode::MsPe));
    return std_mean[GenMode::SsPe] > std_mean[GenMode::MsPe] && std_mean[GenMode::SsPe] > std_mean[GenMode::Baseline];
  });
}

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Runs the tool inside `cwd` so that both runs see identical relative paths.
int run_tool(const std::string& tool, const fs::path& cwd, const std::string& args, const std::string& out) {
  const std::string cmd = "cd \"" + cwd.string() + "\" && \"" + tool + "\" --deterministic -q " + args + " -o " + out +
                          " > /dev/null";
  return std::system(cmd.c_str());
}

CheckResult criterion_persistence(const std::string& tool) {
  return timed_check(12, "bit-exact checkpoints and reproducible runs", [&](std::string& detail) {
    // In-memory round trip of a trained stack, compared bit for bit.
    const auto& spec = trained_stacks().spec.at(GenMode::MsPe);
    const Checkpoint saved = save_generator(spec);
    const auto bytes = encode_checkpoint(saved);
    const Checkpoint back = decode_checkpoint(bytes);
    bool exact = encode_checkpoint(back) == bytes && back.entries.size() == saved.entries.size();
    for (std::size_t k = 0; exact && k < saved.entries.size(); ++k) {
      const auto& a = saved.entries[k].data;
      const auto& b = back.entries[k].data;
      exact = a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(float) * a.size()) == 0;
    }
    const GeneratorSpec reloaded = load_generator(back);
    const auto& in = trained_stacks().inputs.at(GenMode::MsPe);
    const Tensor x = synth_forward(spec, in), y = synth_forward(reloaded, in);
    exact = exact && std::memcmp(x.data().data(), y.data().data(), sizeof(float) * x.data().size()) == 0;

    if (tool.empty()) {
      detail = "checkpoint round trip " + std::string(exact ? "bit-exact" : "DIFFERS") + "; no tool path given";
      return false;
    }
    const fs::path root = fs::temp_directory_path() / "mspe_acceptance";
    fs::remove_all(root);
    int failures = 0;
    for (const char* run : {"a", "b"}) {
      const fs::path d = root / run;
      fs::create_directories(d);
      failures += run_tool(tool, d, "build-dataset --count 16 --channels 3", "data") != 0;
      failures += run_tool(tool, d,
                           "train --dataset data/dataset.ckpt --count 16 --steps 30 --batch 4 "
                           "--channels 16,16,16,8,8 --latent-dim 8 --seed 2",
                           "train") != 0;
      failures += run_tool(tool, d, "train --model denoiser --mode ms-pe --count 16 --steps 10 --batch 4 --channels 8,8",
                           "dtrain") != 0;
      failures += run_tool(tool, d, "generate --checkpoint train/model.ckpt --shift 3,0", "gen") != 0;
      failures += run_tool(tool, d, "reconstruct --checkpoint dtrain/model.ckpt --reconstruct 20 --count 4 --shift 16,0",
                           "rec") != 0;
      failures += run_tool(tool, d, "report --checkpoint train/model.ckpt --max-shift 8 --latents 4 --noise-instances 8",
                           "report") != 0;
    }
    int compared = 0;
    std::vector<std::string> differing;
    for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
      if (!e.is_regular_file()) continue;
      const fs::path rel = fs::relative(e.path(), root / "a");
      const fs::path other = root / "b" / rel;
      ++compared;
      if (!fs::exists(other) || file_bytes(e.path()) != file_bytes(other)) differing.push_back(rel.string());
    }
    const bool csv = fs::exists(root / "a" / "train" / "losses.csv") && fs::exists(root / "a" / "report" / "curve.csv");
    detail = "checkpoint round trip " + std::string(exact ? "bit-exact" : "DIFFERS") + "; " +
             std::to_string(failures) + " failed tool runs; " + std::to_string(differing.size()) + " of " +
             std::to_string(compared) + " output files differ between two runs";
    for (const auto& name : differing) detail += " " + name;
    fs::remove_all(root);
    return exact && failures == 0 && differing.empty() && compared > 0 && csv;
  });
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  const std::string tool = argc > 1 ? fs::absolute(argv[1]).string() : "";
  std::vector<CheckResult> results;
  auto report = [&](const CheckResult& r) {
    std::cout << format_result(r) << std::endl;
    results.push_back(r);
  };
  report(check_pe_oracle());
  report(check_shift_algebra());
  report(check_shift_rule());
  report(check_equivariance());
  report(check_gradients());
  report(check_similarity_metric());
  report(check_diffusion_math());
  report(criterion_diffusion_bias());
  report(criterion_shift_curves());
  report(criterion_noise_probe());
  report(check_expansion_contracts());
  report(criterion_persistence(tool));

  int failed = 0;
  for (const auto& r : results) failed += !r.passed;
  std::cout << results.size() - failed << " of " << results.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
