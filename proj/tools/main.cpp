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

#include "commands.hpp"

#include "mspe/errors.hpp"
#include "mspe/runtime.hpp"
#include "mspe/tensor.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>

namespace {

using namespace mspe::cli;

void add_out(CLI::App* cmd, std::filesystem::path& out) {
  cmd->add_option("-o,--out", out, "Output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  mspe::tune_allocator();
  CLI::App app{"Positional-encoding generators: grids, training, shifted generation and bias probes"};
  app.set_config("--config", "", "key = value configuration file; flags win over file entries");
  app.require_subcommand(1);
  GlobalOptions global;
  app.add_flag("--deterministic", global.deterministic, "Single-threaded numerics and fixed reduction order");
  app.add_flag("-q,--quiet", global.quiet, "Do not echo the resolved configuration");

  BuildPeOptions pe;
  auto* cmd_pe = app.add_subcommand("build-pe", "Write a positional-encoding grid or pyramid and heatmaps");
  cmd_pe->add_option("--height", pe.height, "Coarsest grid height")->capture_default_str();
  cmd_pe->add_option("--width", pe.width, "Coarsest grid width")->capture_default_str();
  cmd_pe->add_option("--channels", pe.channels, "Channels per level (divisible by 4)")->capture_default_str();
  cmd_pe->add_option("--levels", pe.levels, "Pyramid levels, each doubling the size")->capture_default_str();
  cmd_pe->add_option("--shift", pe.shift, "Image-space shift dh,dw")->delimiter(',')->expected(2);
  cmd_pe->add_option("--wrap", pe.wrap, "circular or open")->capture_default_str();
  cmd_pe->add_option("--heatmap-channel", pe.heatmap_channel, "Channel drawn in the heatmaps")->capture_default_str();
  add_out(cmd_pe, pe.out);

  BuildDatasetOptions ds;
  auto* cmd_ds = app.add_subcommand("build-dataset", "Build a spatially biased canvas dataset");
  cmd_ds->add_option("--source", ds.source, "synthetic or idx")->capture_default_str();
  cmd_ds->add_option("--images", ds.images, "IDX image file (default $MSPE_DATA_DIR/train-images-idx3-ubyte)");
  cmd_ds->add_option("--labels", ds.labels, "IDX label file (default $MSPE_DATA_DIR/train-labels-idx1-ubyte)");
  cmd_ds->add_option("--count", ds.count, "Number of images")->capture_default_str();
  cmd_ds->add_option("--canvas", ds.canvas, "Canvas size")->capture_default_str();
  cmd_ds->add_option("--patch", ds.patch, "Patch size")->capture_default_str();
  cmd_ds->add_option("--channels", ds.channels, "1 (gray) or 3 (colorized)")->capture_default_str();
  cmd_ds->add_option("--top", ds.top, "Patch row")->capture_default_str();
  cmd_ds->add_option("--left", ds.left, "Patch column")->capture_default_str();
  cmd_ds->add_option("--seed", ds.seed, "Seed")->capture_default_str();
  cmd_ds->add_option("--preview", ds.preview, "Preview images to write")->capture_default_str();
  add_out(cmd_ds, ds.out);

  TrainOptions tr;
  auto* cmd_tr = app.add_subcommand("train", "Train a synthesis stack or a denoiser");
  cmd_tr->add_option("--model", tr.model, "generator or denoiser")->capture_default_str();
  cmd_tr->add_option("--mode", tr.mode, "baseline, ss-pe or ms-pe")->capture_default_str();
  cmd_tr->add_option("--dataset", tr.dataset, "dataset.ckpt from build-dataset (default: synthetic glyphs)");
  cmd_tr->add_option("--count", tr.count, "Training images")->capture_default_str();
  cmd_tr->add_option("--data-seed", tr.data_seed, "Seed of the synthetic glyphs")->capture_default_str();
  cmd_tr->add_option("--padding", tr.padding, "zero or circular")->capture_default_str();
  cmd_tr->add_option("--channels", tr.channels, "Channels per scale")->delimiter(',');
  cmd_tr->add_option("--steps", tr.steps, "Optimizer steps")->capture_default_str();
  cmd_tr->add_option("--batch", tr.batch, "Batch size")->capture_default_str();
  cmd_tr->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  cmd_tr->add_option("--seed", tr.seed, "Seed")->capture_default_str();
  cmd_tr->add_option("--log-every", tr.log_every, "Print the loss every N steps")->capture_default_str();
  cmd_tr->add_option("--base", tr.base, "Generator: coarsest grid size")->capture_default_str();
  cmd_tr->add_option("--latent-dim", tr.latent_dim, "Generator: latent size")->capture_default_str();
  cmd_tr->add_flag("--no-noise", tr.no_noise, "Generator: disable noise injection");
  cmd_tr->add_flag("--resample-noise", tr.resample_noise, "Generator: fresh noise every step");
  cmd_tr->add_option("--resize", tr.resize, "Generator: random-resize heights")->delimiter(',');
  cmd_tr->add_option("--size", tr.size, "Denoiser: image size")->capture_default_str();
  cmd_tr->add_option("--timesteps", tr.timesteps, "Denoiser: diffusion steps T")->capture_default_str();
  cmd_tr->add_option("--beta-start", tr.beta_start, "Denoiser: beta_1")->capture_default_str();
  cmd_tr->add_option("--beta-end", tr.beta_end, "Denoiser: beta_T")->capture_default_str();
  cmd_tr->add_option("--clip-norm", tr.clip_norm, "Denoiser: gradient-norm limit (0: off)")->capture_default_str();
  add_out(cmd_tr, tr.out);

  GenerateOptions gen;
  std::vector<double> gen_shift;
  std::vector<int> gen_size;
  int gen_reconstruct = 0;
  auto add_generate_options = [&](CLI::App* cmd, bool reconstruct_required) {
    cmd->add_option("--checkpoint", gen.checkpoint, "model.ckpt")->required();
    cmd->add_option("--count", gen.count, "Images to produce")->capture_default_str();
    cmd->add_option("--seed", gen.seed, "Seed")->capture_default_str();
    cmd->add_option("--latents", gen.latents, "random or train")->capture_default_str();
    cmd->add_option("--shift", gen_shift, "Shift dh,dw in image pixels")->delimiter(',')->expected(2);
    cmd->add_option("--dataset", gen.dataset, "Reconstruction inputs (default: synthetic glyphs)");
    cmd->add_option("--data-seed", gen.data_seed, "Seed of the synthetic glyphs")->capture_default_str();
    auto* r = cmd->add_option("--reconstruct", gen_reconstruct, "Denoiser: encode to t_enc and decode");
    if (reconstruct_required) r->required();
    add_out(cmd, gen.out);
  };
  auto* cmd_gen = app.add_subcommand("generate", "Generate images, optionally shifted, resized or expanded");
  add_generate_options(cmd_gen, false);
  cmd_gen->add_option("--size", gen_size, "Output size H,W")->delimiter(',')->expected(2);
  cmd_gen->add_option("--expand", gen.expand, "rows=a:b,...;cols=a:b,...;margin=h,w");
  auto* cmd_rec = app.add_subcommand("reconstruct", "Stochastic reconstruction with a denoiser");
  add_generate_options(cmd_rec, true);

  ReportOptions rep;
  auto* cmd_rep = app.add_subcommand("report", "Shift-consistency curves, noise probes and image comparisons");
  cmd_rep->add_option("--checkpoint", rep.checkpoints, "Generator checkpoints, one curve each");
  cmd_rep->add_option("--max-shift", rep.max_shift, "Largest shift (0: one period)")->capture_default_str();
  cmd_rep->add_option("--latents", rep.latents, "Latents averaged per curve point")->capture_default_str();
  cmd_rep->add_option("--latent-source", rep.latent_source, "train or random")->capture_default_str();
  cmd_rep->add_option("--seed", rep.seed, "Seed")->capture_default_str();
  cmd_rep->add_option("--noise-instances", rep.noise_instances, "Noise draws for the std probe (0: skip)")
      ->capture_default_str();
  cmd_rep->add_option("--compare", rep.compare, "Two images or directories compared pairwise")->expected(2);
  cmd_rep->add_option("--quadrants", rep.quadrants, "Images or directories for quadrant mass");
  add_out(cmd_rep, rep.out);

  VerifyOptions ver;
  auto* cmd_ver = app.add_subcommand("verify", "Run the invariant suite");
  cmd_ver->add_option("--only", ver.only, "Check ids to run")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*cmd_pe) return build_pe(global, pe);
    if (*cmd_ds) return build_dataset(global, ds);
    if (*cmd_tr) return train(global, tr);
    if (*cmd_gen || *cmd_rec) {
      if (!gen_shift.empty()) gen.shift = gen_shift;
      if (!gen_size.empty()) gen.size = gen_size;
      if (cmd_gen->count("--reconstruct") + cmd_rec->count("--reconstruct") > 0) gen.reconstruct = gen_reconstruct;
      return generate(global, gen);
    }
    if (*cmd_rep) return report(global, rep);
    if (*cmd_ver) return verify(global, ver);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const mspe::FormatError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: malformed checkpoint manifest: " << e.what() << "\n";
    return kExitData;
  } catch (const mspe::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
