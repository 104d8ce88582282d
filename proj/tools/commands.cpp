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

#include "mspe/bias_eval.hpp"
#include "mspe/checkpoint.hpp"
#include "mspe/dataset.hpp"
#include "mspe/diffusion.hpp"
#include "mspe/image_io.hpp"
#include "mspe/model_io.hpp"
#include "mspe/ops.hpp"
#include "mspe/pe.hpp"
#include "mspe/train.hpp"
#include "mspe/verify.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace mspe::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void usage_check(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void prepare_out(const fs::path& out) { fs::create_directories(out); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

// Echoes the resolved configuration to stdout and next to the outputs.
void echo_config(const GlobalOptions& g, const std::string& verb, const json& cfg, const fs::path& out) {
  // The output directory is echoed but kept out of stored artifacts so that
  // identical runs into different directories produce identical files.
  json full = {{"verb", verb}, {"deterministic", g.deterministic}, {"options", cfg}, {"out", out.string()}};
  if (!g.quiet) std::cout << full.dump(2) << "\n";
  write_text(out / (verb + "_config.json"), full.dump(2) + "\n");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string indexed(const std::string& prefix, int k, const std::string& ext) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", k);
  return prefix + "_" + buf + ext;
}

void require_finite_losses(const std::vector<float>& losses) {
  for (std::size_t k = 0; k < losses.size(); ++k) {
    if (!std::isfinite(losses[k])) throw NumericError("training loss became non-finite at step " + std::to_string(k));
  }
}

void write_losses(const fs::path& path, const std::vector<float>& losses) {
  std::ostringstream os;
  os << "step,loss\n";
  for (std::size_t k = 0; k < losses.size(); ++k) os << k << "," << fmt(losses[k]) << "\n";
  write_text(path, os.str());
}

std::string checkpoint_kind(const Checkpoint& ckpt) {
  if (ckpt.config.contains("kind")) return ckpt.config.at("kind").get<std::string>();
  return ckpt.config.at("model").contains("base_h") ? "generator" : "denoiser";
}

fs::path data_dir_file(const char* name) {
  const char* dir = std::getenv("MSPE_DATA_DIR");
  return fs::path(dir ? dir : ".") / name;
}

json dataset_json(const BuildDatasetOptions& o) {
  return {{"source", o.source},   {"images", o.images.string()}, {"labels", o.labels.string()},
          {"count", o.count},     {"canvas", o.canvas},          {"patch", o.patch},
          {"channels", o.channels}, {"top", o.top},              {"left", o.left},
          {"seed", o.seed},       {"preview", o.preview}};
}

Tensor load_images(const fs::path& path) {
  const auto ckpt = load_checkpoint(path);
  if (!ckpt.has("images")) throw FormatError(path.string() + " holds no 'images' entry", 0);
  return ckpt.tensor("images");
}

Tensor synthetic_images(int count, std::uint64_t seed, int size, int channels) {
  CanvasOptions co;
  co.canvas = size;
  co.patch = size / 2;
  co.channels = channels;
  return synth_glyphs(count, seed, co).images;
}

SynthInputs generator_inputs(const GeneratorSpec& spec, const Checkpoint& ckpt, const std::string& source, int count,
                             std::uint64_t seed) {
  if (source == "train") {
    usage_check(ckpt.has("latent.codes"), "checkpoint stores no training latents; use random latents");
    const Tensor codes = ckpt.tensor("latent.codes");
    usage_check(count <= codes.shape().n, "only " + std::to_string(codes.shape().n) + " training latents stored");
    std::vector<int> idx(count);
    for (int k = 0; k < count; ++k) idx[k] = k;
    SynthInputs in = make_inputs(spec, gather_batch(codes, idx));
    for (int l = 0; ckpt.has("latent.noise" + std::to_string(l)); ++l) {
      in.noise.push_back(gather_batch(ckpt.tensor("latent.noise" + std::to_string(l)), idx));
    }
    return in;
  }
  usage_check(source == "random", "latent source must be 'train' or 'random', got '" + source + "'");
  SynthInputs in = make_inputs(spec, sample_latents(spec, count, seed));
  if (spec.config.noise_injection) in.noise = sample_noise(spec, count, seed + 1);
  return in;
}

BetaSchedule schedule_from(const Checkpoint& ckpt) {
  const auto& s = ckpt.config.at("schedule");
  return make_beta_schedule(s.at("T").get<int>(), s.at("beta_start").get<double>(), s.at("beta_end").get<double>());
}

void write_batch(const fs::path& out, const std::string& prefix, const Tensor& images) {
  for (int n = 0; n < images.shape().n; ++n) write_pnm(out / indexed(prefix, n, images.shape().c == 3 ? ".ppm" : ".pgm"), images, n);
}

std::vector<fs::path> image_files(const fs::path& p) {
  if (!fs::is_directory(p)) return {p};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(p)) {
    const auto ext = e.path().extension();
    if (ext == ".ppm" || ext == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

ExpandSpec parse_expand(const std::string& text) {
  ExpandSpec spec;
  std::stringstream parts(text);
  std::string part;
  auto number = [](const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    usage_check(used == s.size() && !s.empty(), "expand: '" + s + "' is not a number");
    return v;
  };
  while (std::getline(parts, part, ';')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    usage_check(eq != std::string::npos, "expand: expected key=value, got '" + part + "'");
    const std::string key = part.substr(0, eq);
    std::stringstream items(part.substr(eq + 1));
    std::string item;
    if (key == "margin") {
      std::vector<double> m;
      while (std::getline(items, item, ',')) m.push_back(number(item));
      usage_check(m.size() == 2, "expand: margin needs two values h,w");
      spec.margin_h = m[0];
      spec.margin_w = m[1];
    } else if (key == "rows" || key == "cols") {
      auto& segs = key == "rows" ? spec.rows : spec.cols;
      while (std::getline(items, item, ',')) {
        const auto colon = item.find(':');
        usage_check(colon != std::string::npos, "expand: segment '" + item + "' needs begin:end");
        segs.emplace_back(number(item.substr(0, colon)), number(item.substr(colon + 1)));
      }
    } else {
      usage_check(false, "expand: unknown key '" + key + "' (rows, cols, margin)");
    }
  }
  return spec;
}

int build_pe(const GlobalOptions& g, const BuildPeOptions& o) {
  usage_check(o.height >= 1 && o.width >= 1, "grid height and width must be at least 1");
  usage_check(o.levels >= 1 && o.levels <= 10, "levels must be in 1..10");
  usage_check(o.shift.size() == 2, "--shift takes two values dh,dw");
  usage_check(o.wrap == "circular" || o.wrap == "open", "--wrap must be 'circular' or 'open'");
  usage_check(o.heatmap_channel >= 0 && o.heatmap_channel < o.channels, "--heatmap-channel outside the grid");
  detail::require_channels(o.channels);
  prepare_out(o.out);
  const json cfg = {{"height", o.height}, {"width", o.width}, {"channels", o.channels}, {"levels", o.levels},
                    {"shift", o.shift},   {"wrap", o.wrap},     {"heatmap_channel", o.heatmap_channel}};
  echo_config(g, "build-pe", cfg, o.out);

  const auto pyramid = build_pyramid<float>(o.height, o.width, std::vector<int>(o.levels, o.channels));
  const auto shifted =
      shift_pyramid(pyramid, o.shift[0], o.shift[1], o.wrap == "circular" ? WrapMode::Circular : WrapMode::Open);
  Checkpoint ckpt;
  ckpt.config["kind"] = "pe";
  ckpt.config["run"] = cfg;
  for (int l = 0; l < o.levels; ++l) {
    const auto& grid = shifted.levels[l];
    ckpt.add("level" + std::to_string(l), "pe", to_tensor(grid));
    ckpt.config["levels"].push_back({{"row_coords", grid.row_coords},
                                     {"col_coords", grid.col_coords},
                                     {"offset_h", shifted.offset_h[l]},
                                     {"offset_w", shifted.offset_w[l]}});
    Eigen::ArrayXXd map(grid.height, grid.width);
    for (int i = 0; i < grid.height; ++i)
      for (int j = 0; j < grid.width; ++j) map(i, j) = grid.at(o.heatmap_channel, i, j);
    write_heatmap(o.out / ("level" + std::to_string(l) + "_c" + std::to_string(o.heatmap_channel) + ".pgm"), map, -1.0,
                  1.0);
  }
  save_checkpoint(o.out / "pe.ckpt", ckpt);
  return kExitOk;
}

int build_dataset(const GlobalOptions& g, const BuildDatasetOptions& opt) {
  BuildDatasetOptions o = opt;
  usage_check(o.source == "synthetic" || o.source == "idx", "--source must be 'synthetic' or 'idx'");
  usage_check(o.count >= 1, "--count must be positive");
  usage_check(o.channels == 1 || o.channels == 3, "--channels must be 1 or 3");
  if (o.source == "idx") {
    if (o.images.empty()) o.images = data_dir_file("train-images-idx3-ubyte");
    if (o.labels.empty()) o.labels = data_dir_file("train-labels-idx1-ubyte");
  }
  prepare_out(o.out);
  const json cfg = dataset_json(o);
  echo_config(g, "build-dataset", cfg, o.out);

  CanvasOptions co;
  co.canvas = o.canvas;
  co.patch = o.patch;
  co.channels = o.channels;
  co.top = o.top;
  co.left = o.left;
  const BiasedCanvasSet set = o.source == "synthetic"
                                  ? synth_glyphs(o.count, o.seed, co)
                                  : from_idx(read_idx_file(o.images), read_idx_file(o.labels), o.count, co);
  Checkpoint ckpt;
  ckpt.config["kind"] = "dataset";
  ckpt.config["run"] = cfg;
  ckpt.add("images", "data", set.images);
  Eigen::ArrayXf labels(static_cast<Eigen::Index>(set.labels.size()));
  for (std::size_t k = 0; k < set.labels.size(); ++k) labels[static_cast<Eigen::Index>(k)] = static_cast<float>(set.labels[k]);
  ckpt.add("labels", "data", Tensor::from_array({o.count, 1, 1, 1}, labels));
  save_checkpoint(o.out / "dataset.ckpt", ckpt);
  for (int n = 0; n < std::min(o.preview, o.count); ++n) {
    write_pnm(o.out / indexed("preview", n, o.channels == 3 ? ".ppm" : ".pgm"), set.images, n);
  }
  return kExitOk;
}

int train(const GlobalOptions& g, const TrainOptions& o) {
  usage_check(o.model == "generator" || o.model == "denoiser", "--model must be 'generator' or 'denoiser'");
  usage_check(o.steps >= 0 && o.batch >= 1 && o.count >= 1, "--steps, --batch and --count must be non-negative/positive");
  const GenMode mode = parse_gen_mode(o.mode);
  const Padding padding = parse_padding(o.padding);
  prepare_out(o.out);
  json cfg = {{"model", o.model},     {"mode", o.mode},           {"dataset", o.dataset.string()},
              {"count", o.count},     {"data_seed", o.data_seed}, {"padding", o.padding},
              {"channels", o.channels}, {"steps", o.steps},       {"batch", o.batch},
              {"lr", o.lr},           {"seed", o.seed}};
  ProgressFn progress;
  if (o.log_every > 0) {
    progress = [&](int step, float loss) {
      if ((step + 1) % o.log_every == 0) std::cerr << "step " << step + 1 << " loss " << loss << "\n";
    };
  }

  if (o.model == "generator") {
    cfg.update({{"base", o.base}, {"latent_dim", o.latent_dim}, {"noise", !o.no_noise},
                {"resample_noise", o.resample_noise}, {"resize", o.resize}});
    echo_config(g, "train", cfg, o.out);
    GeneratorConfig gc;
    gc.mode = mode;
    gc.base_h = gc.base_w = o.base;
    if (!o.channels.empty()) gc.channels = o.channels;
    gc.latent_dim = o.latent_dim;
    gc.padding = padding;
    gc.noise_injection = !o.no_noise;
    gc.seed = o.seed;
    Tensor images = o.dataset.empty() ? Tensor() : load_images(o.dataset);
    if (images.defined()) {
      gc.image_channels = images.shape().c;
      usage_check(images.shape().n >= o.count, "dataset holds fewer than --count images");
      std::vector<int> idx(o.count);
      for (int k = 0; k < o.count; ++k) idx[k] = k;
      images = gather_batch(images, idx);
    }
    gc.validate();
    if (!images.defined()) images = synthetic_images(o.count, o.data_seed, gc.out_h(), gc.image_channels);
    GeneratorSpec spec = make_generator(gc);
    LatentState state = make_latent_state(spec, o.count, o.seed + 1);
    GeneratorTrainOptions to;
    to.steps = o.steps;
    to.batch = o.batch;
    to.lr = o.lr;
    to.seed = o.seed;
    to.resize_sizes = o.resize;
    to.resample_noise = o.resample_noise;
    const auto losses = train_generator(spec, state, images, to, progress);
    require_finite_losses(losses);
    Checkpoint ckpt = save_generator(spec);
    ckpt.config["kind"] = "generator";
    ckpt.config["run"] = cfg;
    ckpt.add("latent.codes", "state", state.codes);
    for (std::size_t l = 0; l < state.noise.size(); ++l) ckpt.add("latent.noise" + std::to_string(l), "state", state.noise[l]);
    save_checkpoint(o.out / "model.ckpt", ckpt);
    write_losses(o.out / "losses.csv", losses);
    return kExitOk;
  }

  usage_check(mode != GenMode::SsPe, "the denoiser supports modes 'baseline' and 'ms-pe' only");
  cfg.update({{"size", o.size},
              {"timesteps", o.timesteps},
              {"beta_start", o.beta_start},
              {"beta_end", o.beta_end},
              {"clip_norm", o.clip_norm}});
  echo_config(g, "train", cfg, o.out);
  DenoiserConfig dc;
  dc.size = o.size;
  if (!o.channels.empty()) dc.channels = o.channels;
  dc.steps = o.timesteps;
  dc.use_pe = mode == GenMode::MsPe;
  dc.padding = padding;
  dc.seed = o.seed;
  Tensor images = o.dataset.empty() ? Tensor() : load_images(o.dataset);
  if (images.defined()) {
    dc.image_channels = images.shape().c;
    usage_check(images.shape().h == o.size && images.shape().w == o.size, "dataset images do not match --size");
  } else {
    images = synthetic_images(o.count, o.data_seed, o.size, 1);
  }
  dc.validate();
  const BetaSchedule sched = make_beta_schedule(o.timesteps, o.beta_start, o.beta_end);
  Denoiser model = make_denoiser(dc);
  DiffusionTrainOptions to;
  to.steps = o.steps;
  to.batch = o.batch;
  to.lr = o.lr;
  to.clip_norm = o.clip_norm;
  to.seed = o.seed;
  const auto losses = train_denoiser(model, images, sched, to, progress);
  require_finite_losses(losses);
  Checkpoint ckpt = save_denoiser(model);
  ckpt.config["kind"] = "denoiser";
  ckpt.config["run"] = cfg;
  ckpt.config["schedule"] = {{"T", o.timesteps}, {"beta_start", o.beta_start}, {"beta_end", o.beta_end}};
  save_checkpoint(o.out / "model.ckpt", ckpt);
  write_losses(o.out / "losses.csv", losses);
  return kExitOk;
}

int generate(const GlobalOptions& g, const GenerateOptions& o) {
  usage_check(!o.checkpoint.empty(), "--checkpoint is required");
  usage_check(o.count >= 1, "--count must be positive");
  const int requests = (o.shift ? 1 : 0) + (o.size ? 1 : 0) + (o.expand.empty() ? 0 : 1);
  usage_check(requests <= 1, "--shift, --size and --expand are mutually exclusive");
  usage_check(!o.shift || o.shift->size() == 2, "--shift takes two values dh,dw");
  usage_check(!o.size || o.size->size() == 2, "--size takes two values H,W");
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const std::string kind = checkpoint_kind(ckpt);
  prepare_out(o.out);
  json cfg = {{"checkpoint", o.checkpoint.string()}, {"count", o.count}, {"seed", o.seed}, {"latents", o.latents}};
  if (o.shift) cfg["shift"] = *o.shift;
  if (o.size) cfg["size"] = *o.size;
  if (!o.expand.empty()) cfg["expand"] = o.expand;
  if (o.reconstruct) cfg["reconstruct"] = *o.reconstruct;

  if (kind == "denoiser") {
    usage_check(o.reconstruct.has_value(), "denoiser checkpoints generate via --reconstruct t_enc");
    usage_check(!o.size && o.expand.empty(), "denoiser reconstruction supports --shift only");
    cfg["dataset"] = o.dataset.string();
    cfg["data_seed"] = o.data_seed;
    echo_config(g, "generate", cfg, o.out);
    const Denoiser model = load_denoiser(ckpt);
    const BetaSchedule sched = schedule_from(ckpt);
    usage_check(*o.reconstruct >= 1 && *o.reconstruct <= sched.T,
                "--reconstruct must lie in 1.." + std::to_string(sched.T));
    Tensor images = o.dataset.empty() ? synthetic_images(o.count, o.data_seed, model.config.size, model.config.image_channels)
                                      : load_images(o.dataset);
    usage_check(images.shape().n >= o.count, "dataset holds fewer than --count images");
    std::vector<int> idx(o.count);
    for (int k = 0; k < o.count; ++k) idx[k] = k;
    images = gather_batch(images, idx);
    std::optional<PEPyramid<float>> pyr;
    if (model.config.use_pe) {
      pyr = denoiser_pyramid(model.config);
      if (o.shift) pyr = shift_pyramid(*pyr, (*o.shift)[0], (*o.shift)[1], WrapMode::Circular);
    } else {
      usage_check(!o.shift, "a denoiser without positional encoding cannot be shifted");
    }
    const Tensor rec = stochastic_reconstruct(images, *o.reconstruct, predictor(model, pyr ? &*pyr : nullptr), sched, o.seed);
    check_finite(rec, "reconstruction");
    write_batch(o.out, "sample", rec);
    std::ostringstream os;
    os << "index,upper_left,upper_right,bottom_left,bottom_right\n";
    for (int n = 0; n < o.count; ++n) {
      const auto q = quadrant_mass(gray_map(rec, n));
      os << n << "," << fmt(q[0]) << "," << fmt(q[1]) << "," << fmt(q[2]) << "," << fmt(q[3]) << "\n";
    }
    write_text(o.out / "quadrants.csv", os.str());
    return kExitOk;
  }

  usage_check(kind == "generator", "checkpoint kind '" + kind + "' cannot generate images");
  usage_check(!o.reconstruct, "--reconstruct needs a denoiser checkpoint");
  echo_config(g, "generate", cfg, o.out);
  const GeneratorSpec spec = load_generator(ckpt);
  SynthInputs in = generator_inputs(spec, ckpt, o.latents, o.count, o.seed);
  Tensor out;
  if (o.shift) {
    if (spec.config.mode == GenMode::MsPe) {
      out = shifted_generate(spec, in, (*o.shift)[0], (*o.shift)[1]);
    } else {
      usage_check((*o.shift)[1] == 0.0, "only vertical shifts are defined for this mode");
      out = mode_shifted_generate(spec, in, (*o.shift)[0]);
    }
  } else if (o.size) {
    out = multiscale_generate(spec, in, (*o.size)[0], (*o.size)[1]);
  } else if (!o.expand.empty()) {
    const ExpandSpec e = parse_expand(o.expand);
    ExpandPlan plan;
    for (auto [b, en] : e.rows) plan.rows.push_back({b, en});
    for (auto [b, en] : e.cols) plan.cols.push_back({b, en});
    plan.margin_h = e.margin_h;
    plan.margin_w = e.margin_w;
    in.noise.clear();  // noise maps are only defined on the native canvas
    out = expanded_generate(spec, in, plan);
  } else {
    out = synth_forward(spec, in);
  }
  check_finite(out, "generated images");
  write_batch(o.out, "sample", out);
  return kExitOk;
}

int report(const GlobalOptions& g, const ReportOptions& o) {
  usage_check(!o.checkpoints.empty() || !o.compare.empty() || !o.quadrants.empty(),
              "report needs --checkpoint, --compare or --quadrants");
  usage_check(o.compare.empty() || o.compare.size() == 2, "--compare takes exactly two paths");
  usage_check(o.latents >= 1, "--latents must be positive");
  prepare_out(o.out);
  json cfg = {{"max_shift", o.max_shift},   {"latents", o.latents},
              {"latent_source", o.latent_source}, {"seed", o.seed},
              {"noise_instances", o.noise_instances}};
  for (const auto& p : o.checkpoints) cfg["checkpoints"].push_back(p.string());
  for (const auto& p : o.compare) cfg["compare"].push_back(p.string());
  for (const auto& p : o.quadrants) cfg["quadrants"].push_back(p.string());
  echo_config(g, "report", cfg, o.out);

  json summary = json::object();
  if (!o.checkpoints.empty()) {
    std::ostringstream curve;
    curve << "shift,similarity,mode\n";
    for (const auto& path : o.checkpoints) {
      const Checkpoint ckpt = load_checkpoint(path);
      usage_check(checkpoint_kind(ckpt) == "generator", path.string() + " is not a generator checkpoint");
      const GeneratorSpec spec = load_generator(ckpt);
      const SynthInputs in = generator_inputs(spec, ckpt, o.latent_source, o.latents, o.seed);
      const int period = spec.config.out_h();
      std::vector<double> shifts;
      for (int s = 0; s <= (o.max_shift > 0 ? o.max_shift : period); ++s) shifts.push_back(s);
      const ShiftCurve c = shift_consistency_curve(spec, in, shifts);
      double mean = 0;
      for (std::size_t k = 0; k < shifts.size(); ++k) {
        curve << fmt(shifts[k]) << "," << fmt(c.similarities[k]) << "," << c.mode << "\n";
        if (k > 0) mean += c.similarities[k] / static_cast<double>(shifts.size() - 1);
      }
      json entry = {{"checkpoint", path.string()}, {"mean_similarity", mean}};
      if (o.noise_instances >= 2 && spec.config.noise_injection) {
        const Eigen::ArrayXXd std_map = noise_std_probe(spec, in, o.noise_instances, o.seed + 17);
        entry["mean_noise_std"] = std_map.mean();
        entry["max_noise_std"] = std_map.maxCoeff();
        write_heatmap(o.out / ("noise_std_" + c.mode + ".pgm"), std_map, 0.0, std::max(std_map.maxCoeff(), 1e-12));
      }
      summary["curves"][c.mode] = entry;
    }
    write_text(o.out / "curve.csv", curve.str());
  }
  if (!o.compare.empty()) {
    const auto a = image_files(o.compare[0]), b = image_files(o.compare[1]);
    usage_check(a.size() == b.size() && !a.empty(), "--compare paths hold different numbers of images");
    std::ostringstream pairs;
    pairs << "a,b,similarity\n";
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double s = patch_similarity(gray_map(read_pnm(a[k])), gray_map(read_pnm(b[k])));
      pairs << a[k].filename().string() << "," << b[k].filename().string() << "," << fmt(s) << "\n";
    }
    write_text(o.out / "pairs.csv", pairs.str());
  }
  if (!o.quadrants.empty()) {
    std::ostringstream quad;
    quad << "image,upper_left,upper_right,bottom_left,bottom_right\n";
    std::array<double, 4> mean{};
    std::size_t count = 0;
    for (const auto& p : o.quadrants)
      for (const auto& f : image_files(p)) {
        const auto q = quadrant_mass(gray_map(read_pnm(f)));
        quad << f.filename().string() << "," << fmt(q[0]) << "," << fmt(q[1]) << "," << fmt(q[2]) << "," << fmt(q[3])
             << "\n";
        for (int k = 0; k < 4; ++k) mean[k] += q[k];
        ++count;
      }
    write_text(o.out / "quadrants.csv", quad.str());
    if (count > 0) {
      for (double& m : mean) m /= static_cast<double>(count);
      summary["quadrants"] = {{"images", count}, {"mean", mean}};
    }
  }
  write_text(o.out / "summary.json", summary.dump(2) + "\n");
  if (!g.quiet) std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

int verify(const GlobalOptions& g, const VerifyOptions& o) {
  (void)g;
  const std::vector<std::pair<int, CheckResult (*)()>> checks = {
      {1, check_pe_oracle},    {2, check_shift_algebra},     {3, check_shift_rule},
      {4, check_equivariance}, {5, check_gradients},         {6, check_similarity_metric},
      {7, check_diffusion_math}, {11, check_expansion_contracts}};
  for (int id : o.only) {
    bool known = false;
    for (const auto& c : checks) known = known || c.first == id;
    usage_check(known, "no invariant check with id " + std::to_string(id));
  }
  bool all = true;
  for (const auto& [id, fn] : checks) {
    if (!o.only.empty() && std::find(o.only.begin(), o.only.end(), id) == o.only.end()) continue;
    const CheckResult r = fn();
    std::cout << format_result(r) << std::endl;
    all = all && r.passed;
  }
  return all ? kExitOk : kExitFailure;
}

}  // namespace mspe::cli
