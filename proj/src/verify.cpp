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

#include "mspe/verify.hpp"

#include "mspe/bias_eval.hpp"
#include "mspe/diffusion.hpp"
#include "mspe/generator.hpp"
#include "mspe/gradcheck.hpp"
#include "mspe/ops.hpp"
#include "mspe/pe.hpp"
#include "mspe/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace mspe {
namespace {

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  return (a.data() - b.data()).abs().maxCoeff();
}

Tensor random_param(Shape s, std::uint64_t seed, float stddev) {
  Tensor t = gaussian(s, seed, 1, stddev);
  t.set_requires_grad(true);
  return t;
}

ConvParams random_conv(int cin, int cout, int k, Padding pad, std::uint64_t seed, int stride = 1) {
  ConvParams p;
  p.weight = random_param({cout, cin, k, k}, seed, 0.5f);
  p.bias = random_param({1, cout, 1, 1}, seed + 1, 0.5f);
  p.padding = pad;
  p.stride = stride;
  return p;
}

// Randomizes every parameter of a generator so no path is trivially zero.
void randomize(GeneratorSpec& spec, std::uint64_t seed, float stddev) {
  std::uint64_t stream = 900;
  for (auto& [name, t] : spec.named_parameters()) {
    Tensor target = t;
    target.data() = gaussian(t.shape(), seed, stream++, stddev).data();
  }
}

// Direct evaluation of the sinusoidal code for one coordinate pair.
double oracle_pe(double i, double j, int c, int channels) {
  const int d = channels / 4;
  const bool col = c >= 2 * d;
  const int e = col ? c - 2 * d : c;
  const int k = e / 2;
  const double arg = (col ? j : i) / std::pow(10000.0, static_cast<double>(k) / (2.0 * d));
  return e % 2 == 0 ? std::sin(arg) : std::cos(arg);
}

double grid_diff(const PEGrid<double>& a, const PEGrid<double>& b) {
  if (a.data.size() != b.data.size()) return INFINITY;
  return (a.data - b.data).abs().maxCoeff();
}

}  // namespace

CheckResult timed_check(int id, const std::string& name, const std::function<bool(std::string&)>& body) {
  CheckResult r;
  r.id = id;
  r.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    r.passed = body(r.detail);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string format_result(const CheckResult& r) {
  std::ostringstream os;
  os << (r.passed ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << " (" << fmt("%.2f", r.seconds)
     << " s): " << r.detail;
  return os.str();
}

CheckResult check_pe_oracle() {
  return timed_check(1, "positional grid matches direct evaluation", [](std::string& detail) {
    double worst = 0.0;
    for (int hw : {4, 8, 64})
      for (int c : {4, 64}) {
        const auto g = build_grid<float>(hw, hw, c);
        for (int ch = 0; ch < c; ++ch)
          for (int i = 0; i < hw; ++i)
            for (int j = 0; j < hw; ++j) {
              const double got = g.data[(static_cast<std::size_t>(ch) * hw + i) * hw + j];
              worst = std::max(worst, std::fabs(got - oracle_pe(i, j, ch, c)));
            }
      }
    detail = fmt("max abs error %.3g (limit 1e-6)", worst);
    return worst <= 1e-6;
  });
}

CheckResult check_shift_algebra() {
  return timed_check(2, "shift identity, full-period wrap and composition", [](std::string& detail) {
    Philox rng(2024, 0);
    double worst_id = 0, worst_period = 0, worst_comp = 0, worst_pyr = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int h = 1 + static_cast<int>(rng.below(12)), w = 1 + static_cast<int>(rng.below(12));
      const int c = 4 * (1 + static_cast<int>(rng.below(4)));
      const auto g = build_grid<double>(h, w, c);
      const double a = 40.0 * rng.uniform() - 20.0, b = 40.0 * rng.uniform() - 20.0;
      const double a2 = 40.0 * rng.uniform() - 20.0, b2 = 40.0 * rng.uniform() - 20.0;
      worst_id = std::max(worst_id, grid_diff(shift_grid(g, 0.0, 0.0, WrapMode::Circular), g));
      const int kh = static_cast<int>(rng.below(7)) - 3, kw = static_cast<int>(rng.below(7)) - 3;
      worst_period =
          std::max(worst_period, grid_diff(shift_grid(g, kh * h, kw * w, WrapMode::Circular), g));
      const auto twice = shift_grid(shift_grid(g, a, b, WrapMode::Circular), a2, b2, WrapMode::Circular);
      worst_comp = std::max(worst_comp, grid_diff(twice, shift_grid(g, a + a2, b + b2, WrapMode::Circular)));
      const auto open = shift_grid(shift_grid(g, a, b, WrapMode::Open), a2, b2, WrapMode::Open);
      worst_comp = std::max(worst_comp, grid_diff(open, shift_grid(g, a + a2, b + b2, WrapMode::Open)));

      if (trial % 10 == 0) {
        const int L = 1 + static_cast<int>(rng.below(4));
        const auto p = build_pyramid<double>(1 + static_cast<int>(rng.below(3)), 1 + static_cast<int>(rng.below(3)),
                                             std::vector<int>(L, 4));
        const auto s1 = shift_pyramid(shift_pyramid(p, a, b, WrapMode::Circular), a2, b2, WrapMode::Circular);
        const auto s2 = shift_pyramid(p, a + a2, b + b2, WrapMode::Circular);
        const auto full = shift_pyramid(p, p.levels.back().height, -p.levels.back().width, WrapMode::Circular);
        for (int l = 0; l < L; ++l) {
          worst_pyr = std::max(worst_pyr, grid_diff(s1.levels[l], s2.levels[l]));
          worst_pyr = std::max(worst_pyr, grid_diff(full.levels[l], p.levels[l]));
        }
      }
    }
    detail = fmt("identity %.3g, full period %.3g", worst_id, worst_period) +
             fmt(", composition %.3g, pyramid %.3g", worst_comp, worst_pyr);
    return worst_id == 0.0 && worst_period <= 1e-6 && worst_comp <= 1e-6 && worst_pyr <= 1e-6;
  });
}

CheckResult check_shift_rule() {
  return timed_check(3, "per-scale shift equals k * 2^(l-L)", [](std::string& detail) {
    Philox rng(7, 0);
    int mismatches = 0, cases = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const int L = 1 + static_cast<int>(rng.below(7));
      const double k = std::ldexp(static_cast<double>(rng.next_u32()) - 2147483648.0, -20);
      for (int l = 1; l <= L; ++l) {
        ++cases;
        if (scale_shift_amount(k, l, L) != k * std::pow(2.0, l - L)) ++mismatches;
      }
      if (trial % 25 == 0) {
        const auto p = build_pyramid<double>(1, 1, std::vector<int>(L, 4));
        const auto s = shift_pyramid(p, k, -k, WrapMode::Open);
        for (int l = 1; l <= L; ++l) {
          ++cases;
          const double want = k * std::pow(2.0, l - L);
          if (s.offset_h[l - 1] != want || s.offset_w[l - 1] != -want) ++mismatches;
          if (s.levels[l - 1].row_coords[0] != -want) ++mismatches;
        }
      }
    }
    detail = std::to_string(mismatches) + " mismatches over " + std::to_string(cases) + " cases (exact)";
    return mismatches == 0;
  });
}

CheckResult check_equivariance() {
  return timed_check(4, "circular equivariance and zero-padding variance", [](std::string& detail) {
    Philox rng(11, 0);
    float circ = 0;
    for (int trial = 0; trial < 8; ++trial) {
      const Tensor x = gaussian({2, 3, 8 + trial, 9}, 100 + trial, 0);
      const auto p = random_conv(3, 4, trial % 2 ? 5 : 3, Padding::Circular, 200 + trial);
      const int sh = static_cast<int>(rng.below(17)) - 8, sw = static_cast<int>(rng.below(17)) - 8;
      circ = std::max(circ, max_abs_diff(conv2d(roll(x, sh, sw), p), roll(conv2d(x, p), sh, sw)));
      circ = std::max(circ, max_abs_diff(upsample2x_blur(roll(x, sh, sw), Padding::Circular),
                                         roll(upsample2x_blur(x, Padding::Circular), 2 * sh, 2 * sw)));
    }

    GeneratorConfig cfg;
    cfg.channels = {8, 8, 8, 8};
    cfg.latent_dim = 4;
    cfg.padding = Padding::Circular;
    cfg.seed = 5;
    float gen = 0;
    {
      cfg.mode = GenMode::MsPe;
      auto spec = make_generator(cfg);
      randomize(spec, 6, 0.4f);
      auto in = make_inputs(spec, sample_latents(spec, 2, 7));
      const Tensor base = synth_forward(spec, in);
      for (auto [dh, dw] : {std::pair{8, 0}, {-16, 8}, {24, -40}}) {
        gen = std::max(gen, max_abs_diff(shifted_generate(spec, in, dh, dw), roll(base, dh, dw)));
      }
      cfg.mode = GenMode::Baseline;
      auto b = make_generator(cfg);
      randomize(b, 8, 0.4f);
      auto bin = make_inputs(b, sample_latents(b, 2, 9));
      const Tensor bbase = synth_forward(b, bin);
      for (auto [sh, sw] : {std::pair{1, 0}, {-2, 3}}) {
        bin.constant = roll(b.constant, sh, sw);
        gen = std::max(gen, max_abs_diff(synth_forward(b, bin), roll(bbase, 8 * sh, 8 * sw)));
      }
    }

    // Zero padding: rolled input agrees away from the wrap seam and the
    // image border, and differs near them.
    float interior = 0, border = 0;
    {
      const Tensor x = gaussian({1, 3, 24, 24}, 300, 0);
      const auto p = random_conv(3, 4, 3, Padding::Zero, 301);
      const int s = 5;
      const Tensor a = conv2d(roll(x, s, s), p), b = roll(conv2d(x, p), s, s);
      for (int c = 0; c < 4; ++c)
        for (int i = 0; i < 24; ++i)
          for (int j = 0; j < 24; ++j) {
            const float d = std::fabs(a.at(0, c, i, j) - b.at(0, c, i, j));
            const bool inside = i >= s + 1 && i < 23 && j >= s + 1 && j < 23;
            (inside ? interior : border) = std::max(inside ? interior : border, d);
          }
    }
    float g_interior = 0, g_border = 0;
    {
      GeneratorConfig zc;
      zc.mode = GenMode::MsPe;
      zc.base_h = zc.base_w = 8;
      zc.channels = {8, 8, 8};
      zc.latent_dim = 4;
      zc.seed = 12;
      auto spec = make_generator(zc);
      randomize(spec, 13, 0.4f);
      const auto in = make_inputs(spec, sample_latents(spec, 1, 14));
      const int dh = 4, radius = 10;
      const Tensor a = shifted_generate(spec, in, dh, 0.0), b = roll(synth_forward(spec, in), dh, 0);
      for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 32; ++i)
          for (int j = 0; j < 32; ++j) {
            const float d = std::fabs(a.at(0, c, i, j) - b.at(0, c, i, j));
            const bool inside = i >= dh + radius && i < 32 - radius;
            (inside ? g_interior : g_border) = std::max(inside ? g_interior : g_border, d);
          }
    }
    detail = fmt("circular ops %.3g, circular stacks %.3g (limit 1e-6)", circ, gen) +
             fmt("; zero padding conv interior %.3g border %.3g", interior, border) +
             fmt(", stack interior %.3g border %.3g", g_interior, g_border);
    return circ <= 1e-6f && gen <= 1e-6f && interior <= 1e-5f && border > 1e-3f && g_interior <= 1e-5f &&
           g_border > 1e-3f;
  });
}

CheckResult check_gradients() {
  return timed_check(5, "finite-difference gradients of every op", [](std::string& detail) {
    Tensor a = random_param({2, 4, 8, 8}, 50, 1.0f);
    Tensor b = random_param({2, 4, 8, 8}, 51, 1.0f);
    Tensor bias = random_param({1, 4, 1, 1}, 52, 1.0f);
    Tensor per_sample = random_param({2, 4, 1, 1}, 53, 1.0f);
    Tensor gamma = random_param({1, 1, 1, 1}, 54, 1.0f);
    Tensor strength = random_param({1, 1, 1, 1}, 55, 1.0f);
    Tensor one = random_param({1, 4, 8, 8}, 56, 1.0f);
    Tensor small = random_param({2, 4, 4, 4}, 57, 1.0f);
    const Tensor noise = gaussian({2, 1, 8, 8}, 58);
    const Tensor near = scale(small.detach(), 0.9f);
    const auto pe = build_grid<float>(8, 8, 4);
    auto cz = random_conv(4, 4, 3, Padding::Zero, 60);
    auto cc = random_conv(4, 4, 3, Padding::Circular, 62);
    auto cs = random_conv(4, 4, 3, Padding::Zero, 64, 2);
    auto c1 = random_conv(4, 2, 1, Padding::Zero, 66);

    struct Case {
      const char* name;
      std::function<Tensor()> fn;
      std::vector<std::pair<std::string, Tensor>> inputs;
    };
    const std::vector<Case> cases = {
        {"conv2d zero", [&] { return conv2d(a, cz); }, {{"x", a}, {"w", cz.weight}, {"b", cz.bias}}},
        {"conv2d circular", [&] { return conv2d(a, cc); }, {{"x", a}, {"w", cc.weight}, {"b", cc.bias}}},
        {"conv2d stride 2", [&] { return conv2d(a, cs); }, {{"x", a}, {"w", cs.weight}}},
        {"conv2d 1x1", [&] { return conv2d(a, c1); }, {{"x", a}, {"w", c1.weight}, {"b", c1.bias}}},
        {"upsample zero", [&] { return upsample2x_blur(small, Padding::Zero); }, {{"x", small}}},
        {"upsample circular", [&] { return upsample2x_blur(small, Padding::Circular); }, {{"x", small}}},
        {"blur3x3", [&] { return blur3x3(a, Padding::Zero); }, {{"x", a}}},
        {"avg_pool2", [&] { return avg_pool2(a); }, {{"x", a}}},
        {"leaky_relu", [&] { return leaky_relu(a); }, {{"x", a}}},
        {"add", [&] { return add(a, b); }, {{"a", a}, {"b", b}}},
        {"sub", [&] { return sub(a, b); }, {{"a", a}, {"b", b}}},
        {"mul", [&] { return mul(a, b); }, {{"a", a}, {"b", b}}},
        {"scale", [&] { return scale(a, -1.7f); }, {{"a", a}}},
        {"channel bias", [&] { return add_channel_bias(a, bias); }, {{"x", a}, {"bias", bias}}},
        {"per-sample bias", [&] { return add_channel_bias(a, per_sample); }, {{"bias", per_sample}}},
        {"add_scaled_pe", [&] { return add_scaled_pe(a, gamma, pe); }, {{"h", a}, {"gamma", gamma}}},
        {"add_noise", [&] { return add_noise(a, strength, noise); }, {{"h", a}, {"strength", strength}}},
        {"repeat_batch", [&] { return repeat_batch(one, 2); }, {{"t", one}}},
        {"gather_batch", [&] { return gather_batch(a, {1, 0, 1}); }, {{"x", a}}},
        {"concat", [&] { return concat_channels(a, b); }, {{"a", a}, {"b", b}}},
        {"resize up", [&] { return resize_bilinear(small, 7, 6); }, {{"x", small}}},
        {"resize down", [&] { return resize_bilinear(a, 5, 3); }, {{"x", a}}},
        {"sum", [&] { return scale(sum(small), 0.05f); }, {{"x", small}}},
        {"mean", [&] { return mean(small); }, {{"x", small}}},
        {"mse", [&] { return mse_loss(small, near); }, {{"x", small}}},
    };
    double worst = 0;
    std::string worst_name;
    for (const auto& c : cases) {
      const auto r = gradient_check(c.fn, c.inputs, 99);
      if (r.max_rel_error > worst) {
        worst = r.max_rel_error;
        worst_name = std::string(c.name) + "/" + r.worst_input;
      }
    }
    detail = std::to_string(cases.size()) + " ops, worst relative error " + fmt("%.3g", worst) + " at " +
             worst_name + " (limit 1e-3)";
    return worst < 1e-3;
  });
}

CheckResult check_similarity_metric() {
  return timed_check(6, "similarity metric matches brute force", [](std::string& detail) {
    Philox rng(6, 1);
    double worst = 0;
    bool half_exact = true;
    for (int trial = 0; trial < 1000; ++trial) {
      const int h = 5 + static_cast<int>(rng.below(28)), w = 5 + static_cast<int>(rng.below(28));
      Eigen::ArrayXXd a(h, w), b(h, w);
      for (Eigen::Index k = 0; k < a.size(); ++k) {
        a(k) = 1.4 * rng.uniform() - 0.2;
        b(k) = 1.4 * rng.uniform() - 0.2;
      }
      double num = 0, den = 0;
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
          const double x = std::clamp(a(i, j), 0.0, 1.0), y = std::clamp(b(i, j), 0.0, 1.0);
          num += std::min(x, y);
          den += std::max(x, y);
        }
      const double want = den == 0 ? 1.0 : num / den;
      worst = std::max(worst, std::fabs(patch_similarity(a, b) - want));
      const Eigen::ArrayXXd pos = a.max(0.0).min(1.0);
      if (pos.sum() > 0 && patch_similarity(pos, 0.5 * pos) != 0.5) half_exact = false;
    }
    detail = fmt("max deviation %.3g (limit 1e-7); sim(A, 0.5A) == 0.5 ", worst) + (half_exact ? "exactly" : "NOT exact");
    return worst <= 1e-7 && half_exact;
  });
}

CheckResult check_diffusion_math() {
  return timed_check(7, "diffusion schedule, forward moments, reverse step", [](std::string& detail) {
    const auto s = make_beta_schedule(200, 1e-3, 0.05);
    bool exact = s.betas[0] == 0.0 && s.alpha_bars[0] == 1.0 && s.betas[1] == 1e-3 && s.betas[200] == 0.05;
    double prod = 1.0;
    for (int t = 1; t <= 200; ++t) {
      prod *= 1.0 - s.betas[t];
      exact = exact && s.alphas[t] == 1.0 - s.betas[t] && s.alpha_bars[t] == prod &&
              s.sigmas[t] == std::sqrt(s.betas[t]) && s.alpha_bars[t] < s.alpha_bars[t - 1] &&
              (t == 1 || s.betas[t] >= s.betas[t - 1]);
    }

    const int n = 10000;
    double worst_sigma = 0;
    for (int t : {1, 25, 120, 200}) {
      Tensor x = Tensor::from_array({n, 1, 1, 1}, Eigen::ArrayXf::Constant(n, 0.7f));
      for (int k = 1; k <= t; ++k) x = forward_step(x, k, s, gaussian(x.shape(), 70 + t, k));
      const Eigen::ArrayXd v = x.data().cast<double>();
      const double mean = v.mean(), var = (v - mean).square().sum() / (n - 1);
      const double want_mean = std::sqrt(s.alpha_bars[t]) * 0.7, want_var = 1.0 - s.alpha_bars[t];
      // Compare against q_sample draws of the same size as well.
      const Tensor q = q_sample(Tensor::from_array({n, 1, 1, 1}, Eigen::ArrayXf::Constant(n, 0.7f)), t, s,
                                gaussian({n, 1, 1, 1}, 71 + t, 0));
      const Eigen::ArrayXd qv = q.data().cast<double>();
      const double qmean = qv.mean();
      const double se_mean = std::sqrt(want_var / n);
      const double se_var = want_var * std::sqrt(2.0 / (n - 1));
      worst_sigma = std::max({worst_sigma, std::fabs(mean - want_mean) / se_mean,
                              std::fabs(var - want_var) / se_var,
                              std::fabs(mean - qmean) / (std::sqrt(2.0) * se_mean)});
    }

    const Tensor xt = gaussian({1, 1, 4, 4}, 80, 0), noise = gaussian({1, 1, 4, 4}, 80, 1);
    const Tensor pred = gaussian({1, 1, 4, 4}, 80, 2);
    const NoisePredictor eps = [&](const Tensor&, const std::vector<int>&) { return pred; };
    double worst_p = 0;
    for (int t : {1, 2, 100, 200}) {
      const Tensor out = p_sample(xt, t, eps, s, noise);
      for (int k = 0; k < 16; ++k) {
        double want = (xt.data()[k] - s.betas[t] / std::sqrt(1 - s.alpha_bars[t]) * pred.data()[k]) /
                      std::sqrt(s.alphas[t]);
        if (t > 1) want += std::sqrt(s.betas[t]) * noise.data()[k];
        worst_p = std::max(worst_p, std::fabs(out.data()[k] - want));
      }
    }
    detail = std::string("schedule invariants ") + (exact ? "exact" : "VIOLATED") +
             fmt("; forward moments within %.2f sigma (limit 3)", worst_sigma) +
             fmt("; reverse step deviation %.3g (limit 1e-6)", worst_p);
    return exact && worst_sigma <= 3.0 && worst_p <= 1e-6;
  });
}

CheckResult check_expansion_contracts() {
  return timed_check(11, "native-size identity and tile repetition", [](std::string& detail) {
    GeneratorConfig cfg;
    cfg.mode = GenMode::MsPe;
    cfg.channels = {8, 8, 8, 8};
    cfg.latent_dim = 4;
    cfg.padding = Padding::Circular;
    cfg.seed = 21;
    auto spec = make_generator(cfg);
    randomize(spec, 22, 0.4f);
    auto in = make_inputs(spec, sample_latents(spec, 2, 23));
    const auto noise = sample_noise(spec, 2, 24);
    in.noise = noise;
    const bool identical =
        (multiscale_generate(spec, in, cfg.out_h(), cfg.out_w()).data() == synth_forward(spec, in).data()).all();

    // Width doubling with shared noise repeated side by side.
    std::vector<Tensor> wide_noise;
    for (const auto& nz : noise) {
      const Shape s = nz.shape();
      Tensor wide = Tensor::zeros({s.n, 1, s.h, 2 * s.w});
      for (int n = 0; n < s.n; ++n)
        for (int i = 0; i < s.h; ++i)
          for (int j = 0; j < 2 * s.w; ++j) wide.at(n, 0, i, j) = nz.at(n, 0, i, j % s.w);
      wide_noise.push_back(wide);
    }
    in.noise = wide_noise;
    ExpandPlan plan;
    plan.cols = {{0, static_cast<double>(cfg.out_w())}, {0, static_cast<double>(cfg.out_w())}};
    const Tensor out = expanded_generate(spec, in, plan);
    const int W = cfg.out_w(), H = cfg.out_h();
    const float halves = max_abs_diff(crop_wrapped(out, 0, 0, H, W), crop_wrapped(out, 0, W, H, W));
    detail = std::string("native size ") + (identical ? "bit-identical" : "DIFFERS") +
             fmt("; tiled halves differ by %.3g (limit 1e-6)", halves);
    return identical && halves <= 1e-6f;
  });
}

std::vector<CheckResult> run_invariant_suite() {
  return {check_pe_oracle(),   check_shift_algebra(),     check_shift_rule(),
          check_equivariance(), check_gradients(),         check_similarity_metric(),
          check_diffusion_math(), check_expansion_contracts()};
}

}  // namespace mspe
