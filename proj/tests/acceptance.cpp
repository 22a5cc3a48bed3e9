// Copyright 2026 The adnz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end acceptance suite. Each criterion prints exactly one PASS/FAIL
// line; run all with no arguments or a single one with --only N. The heavy
// criteria share a deterministic trained desk model cached under
// ./acceptance_cache (safe to delete; it will be rebuilt).

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "adnz/cli.hpp"
#include "adnz/eval.hpp"
#include "adnz/prune.hpp"
#include "adnz/runtime.hpp"
#include "adnz/search.hpp"

using namespace adnz;

namespace {

namespace fs = std::filesystem;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool cond, const std::string& msg) {
  if (!cond) throw Failure(msg);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

// ---- shared desk fixture -----------------------------------------------------

constexpr std::uint64_t kDeskSeed = 2026;

SceneConfig desk_scene_cfg() {
  SceneConfig cfg;
  cfg.noise = NoiseKind::kWhite;
  cfg.snr_min_db = 0.0;
  cfg.snr_max_db = 0.0;
  cfg.duration_s = 1.5;
  return cfg;
}

Genome desk_genome() {
  Genome g;
  g.levels = {{8, 3, 2, true}, {12, 3, 2, true}, {16, 3, 2, true}};
  g.bottleneck = BottleneckKind::kGru;
  g.hidden = 22;
  g.activation = Activation::kRelu;
  return g;
}

HyperParams desk_hyperparams() {
  HyperParams hp;
  hp.learning_rate = 0.002;
  hp.batch_frames = 48;
  hp.steps = 2200;
  return hp;
}

std::vector<Mixture> desk_train_scenes() { return synth_scenes(desk_scene_cfg(), 20, 101); }
std::vector<Mixture> desk_eval_scenes() { return synth_scenes(desk_scene_cfg(), 6, 202); }

struct DeskModel {
  NetworkInstance net;
  double train_seconds = 0.0;   // wall time of the training run that built it
  double quality_db = 0.0;      // held-out mean SI-SDR improvement
  bool from_cache = false;
};

std::string desk_cache_tag() {
  const HyperParams hp = desk_hyperparams();
  const std::string key = genome_to_text(desk_genome()) + "|steps=" +
                          std::to_string(hp.steps) + "|lr=" + format_double(hp.learning_rate) +
                          "|seed=" + std::to_string(kDeskSeed) + "|v2";
  return to_hex(fnv1a64(key));
}

DeskModel train_desk_model() {
  const fs::path cache_dir = "acceptance_cache";
  fs::create_directories(cache_dir);
  const fs::path model_path = cache_dir / ("desk_" + desk_cache_tag() + ".adnz");
  const fs::path meta_path = cache_dir / ("desk_" + desk_cache_tag() + ".meta");

  DeskModel desk;
  if (fs::exists(model_path) && fs::exists(meta_path)) {
    desk.net = load_model(model_path.string());
    std::ifstream meta(meta_path);
    meta >> desk.train_seconds >> desk.quality_db;
    desk.from_cache = true;
    return desk;
  }

  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(mix_seed(kDeskSeed, 1));
  desk.net = build_network(desk_genome(), rng);
  Rng train_rng(mix_seed(kDeskSeed, 2));
  train_sgd(desk.net, desk_train_scenes(), desk_hyperparams(), train_rng);
  desk.train_seconds = seconds_since(t0);
  desk.quality_db = mean_sisdr_improvement(desk.net, desk_eval_scenes(), StftConfig{});

  save_model(model_path.string(), desk.net);
  std::ofstream meta(meta_path);
  meta << desk.train_seconds << " " << desk.quality_db << "\n";
  return desk;
}

// ---- criteria ------------------------------------------------------------------

// 1. STFT round trip on random 3 s signals, -60 dB interior, under a second.
std::string criterion_stft_round_trip() {
  const StftConfig cfg;
  const auto t0 = std::chrono::steady_clock::now();
  double worst_db = -1e9;
  for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
    Rng rng(seed);
    AudioBuffer x;
    x.sample_rate = cfg.sample_rate;
    x.samples.resize(static_cast<std::size_t>(3 * cfg.sample_rate));
    for (auto& v : x.samples) v = rng.uniform(-0.8, 0.8);
    const AudioBuffer y = istft(stft(x, cfg));
    const std::size_t lo = static_cast<std::size_t>(cfg.window_len / 2);
    const std::size_t hi = y.size() - lo;
    double err = 0.0, sig = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double d = x.samples[i] - y.samples[i];
      err += d * d;
      sig += x.samples[i] * x.samples[i];
    }
    worst_db = std::max(worst_db, 10.0 * std::log10(err / sig));
  }
  const double elapsed = seconds_since(t0);
  expect(worst_db <= -60.0, "round-trip error " + fmt(worst_db, 1) + " dB exceeds -60 dB");
  expect(elapsed < 1.0, "round trip took " + fmt(elapsed) + " s, budget 1 s");
  return "worst " + fmt(worst_db, 1) + " dB, " + fmt(elapsed) + " s";
}

// 2. Central finite differences over every autodiff primitive, 10 seeds.
std::string criterion_autodiff() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 500);
    const auto rand_tensor = [&](std::vector<std::size_t> shape) {
      Tensor<double> t(std::move(shape));
      for (auto& v : t.data) v = rng.uniform(-1.0, 1.0);
      return t;
    };
    const auto offzero = [&](std::vector<std::size_t> shape) {
      Tensor<double> t(std::move(shape));
      for (auto& v : t.data) {
        const double m = rng.uniform(0.1, 1.5);
        v = rng.chance(0.5) ? m : -m;
      }
      return t;
    };
    const auto sq = [](Tape<double>& t, Var v) { return t.sum(t.mul(v, v)); };

    const Tensor<double> a = rand_tensor({3, 4});
    const Tensor<double> b = rand_tensor({4, 2});
    worst = std::max(worst, grad_check<double>(
        [&](Tape<double>& t, Var x) { return t.sum(t.matmul(x, t.input(b, false))); }, a, 1e-5));
    worst = std::max(worst, grad_check<double>(
        [&](Tape<double>& t, Var x) { return t.sum(t.matmul(t.input(a, false), x)); }, b, 1e-5));

    const Tensor<double> cx = rand_tensor({2, 8});
    const Tensor<double> cw = rand_tensor({3, 2, 5});
    for (int stride : {1, 2}) {
      worst = std::max(worst, grad_check<double>(
          [&](Tape<double>& t, Var x) { return t.sum(t.conv1d(x, t.input(cw, false), stride)); },
          cx, 1e-5));
      worst = std::max(worst, grad_check<double>(
          [&](Tape<double>& t, Var x) { return t.sum(t.conv1d(t.input(cx, false), x, stride)); },
          cw, 1e-5));
    }
    const Tensor<double> tx = rand_tensor({3, 4});
    const Tensor<double> tw = rand_tensor({3, 2, 3});
    for (int stride : {1, 2}) {
      worst = std::max(worst, grad_check<double>(
          [&](Tape<double>& t, Var x) { return t.sum(t.tconv1d(x, t.input(tw, false), stride)); },
          tx, 1e-5));
      worst = std::max(worst, grad_check<double>(
          [&](Tape<double>& t, Var x) { return t.sum(t.tconv1d(t.input(tx, false), x, stride)); },
          tw, 1e-5));
    }
    const Tensor<double> e = rand_tensor({3, 5});
    const Tensor<double> f = rand_tensor({3, 5});
    const Tensor<double> bias = rand_tensor({3});
    worst = std::max(worst, grad_check<double>(
        [&](Tape<double>& t, Var x) { return sq(t, t.add(x, t.input(f, false))); }, e, 1e-5));
    worst = std::max(worst, grad_check<double>(
        [&](Tape<double>& t, Var x) { return sq(t, t.mul(x, t.input(f, false))); }, e, 1e-5));
    worst = std::max(worst, grad_check<double>(
        [&](Tape<double>& t, Var x) { return sq(t, t.add_bias(t.input(e, false), x)); }, bias,
        1e-5));
    worst = std::max(worst, grad_check<double>(
        [&](Tape<double>& t, Var x) { return sq(t, t.sigmoid(x)); }, e, 1e-5));
    worst = std::max(worst, grad_check<double>(
        [&](Tape<double>& t, Var x) { return sq(t, t.tanh(x)); }, e, 1e-5));
    worst = std::max(worst, grad_check<double>(
        [&](Tape<double>& t, Var x) { return sq(t, t.relu(x)); }, offzero({3, 5}), 1e-5));
    worst = std::max(worst, grad_check<double>(
        [&](Tape<double>& t, Var x) { return sq(t, t.concat_rows(x, t.input(f, false))); }, e,
        1e-5));
    worst = std::max(worst, grad_check<double>(
        [&](Tape<double>& t, Var x) { return sq(t, t.slice_rows(x, 1, 3)); }, e, 1e-5));
    worst = std::max(worst, grad_check<double>(
        [&](Tape<double>& t, Var x) { return sq(t, t.reshape(x, {5, 3})); }, e, 1e-5));
    worst = std::max(worst, grad_check<double>(
        [&](Tape<double>& t, Var x) { return sq(t, t.scale(x, -1.3)); }, e, 1e-5));
  }
  expect(worst <= 1e-5, "worst relative gradient error " + fmt(worst, 8));
  return "worst relative error " + fmt(worst, 8);
}

// 3. Oracle-mask ceiling at 0 dB SNR.
std::string criterion_oracle_mask() {
  const StftConfig cfg;
  double worst = 1e9;
  for (const Mixture& mix : synth_scenes(desk_scene_cfg(), 3, 707)) {
    const Spectrogram clean_spec = stft(mix.clean, cfg);
    const Spectrogram noisy_spec = stft(mix.mixed, cfg);
    const auto masks = compute_cirm(clean_spec, noisy_spec);
    Spectrogram recon = noisy_spec;
    for (int t = 0; t < recon.n_frames(); ++t) {
      const auto out = apply_mask(noisy_spec.frame(t), noisy_spec.n_bins,
                                  masks[static_cast<std::size_t>(t)]);
      std::copy(out.begin(), out.end(), recon.frame(t));
    }
    const AudioBuffer rec = istft(recon);
    worst = std::min(worst, si_sdr_settled(mix.clean, rec, cfg));
  }
  expect(worst >= 30.0, "oracle-mask SI-SDR " + fmt(worst, 1) + " dB below 30 dB");
  return "worst oracle SI-SDR " + fmt(worst, 1) + " dB";
}

// 4. Mixing law: bit-exact dry path, per-sample affinity, chunking invariance.
std::string criterion_mixing_law() {
  const StftConfig cfg;
  Genome g;
  g.levels = {{6, 3, 2, true}};
  g.bottleneck = BottleneckKind::kGru;
  g.hidden = 8;
  Rng rng(31);
  const NetworkInstance net = build_network(g, rng);
  AudioBuffer in;
  in.sample_rate = cfg.sample_rate;
  Rng sig_rng(32);
  in.samples.resize(9000);
  for (auto& v : in.samples) v = sig_rng.uniform(-0.7, 0.7);

  {  // bit-exact passthrough at mix 0
    StreamingDenoiser denoiser(cfg, &net, 0);
    const auto out = denoiser.push(in.samples);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double want =
          i < static_cast<std::size_t>(cfg.window_len)
              ? 0.0
              : in.samples[i - static_cast<std::size_t>(cfg.window_len)];
      expect(out[i] == want, "mix 0 output is not a bit-exact delayed copy at sample " +
                                 std::to_string(i));
    }
  }
  {  // affinity in alpha
    const auto run_at = [&](int ratio) {
      StreamingDenoiser denoiser(cfg, &net, ratio);
      return denoiser.push(in.samples);
    };
    const auto out0 = run_at(0);
    const auto out100 = run_at(100);
    for (int alpha : {30, 80}) {
      const auto out = run_at(alpha);
      const double a = alpha / 100.0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double want = out0[i] + a * (out100[i] - out0[i]);
        expect(std::abs(out[i] - want) <= 1e-12 * std::max(1.0, std::abs(want)),
               "affine mixing law violated at alpha " + std::to_string(alpha));
      }
    }
  }
  {  // chunking invariance
    std::vector<std::vector<double>> runs;
    for (int chunk : {1, 7, 132, 4096}) {
      StreamingDenoiser denoiser(cfg, &net, 73);
      std::vector<double> out;
      std::size_t offset = 0;
      while (offset < in.size()) {
        const std::size_t n = std::min(static_cast<std::size_t>(chunk), in.size() - offset);
        const auto part = denoiser.push({in.samples.data() + offset, n});
        out.insert(out.end(), part.begin(), part.end());
        offset += n;
      }
      runs.push_back(std::move(out));
    }
    for (std::size_t r = 1; r < runs.size(); ++r) {
      expect(runs[r] == runs[0], "output depends on push chunk size");
    }
  }
  return "dry path bit-exact, affine in alpha, chunk-invariant over {1,7,132,4096}";
}

// 5. Desk training reaches >= 3 dB SI-SDR improvement within 15 minutes.
std::string criterion_desk_training() {
  const DeskModel desk = train_desk_model();
  expect(desk.net.parameter_count() <= 100000,
         "genome has " + std::to_string(desk.net.parameter_count()) + " parameters (>100k)");
  expect(desk.quality_db >= 3.0,
         "held-out improvement " + fmt(desk.quality_db, 2) + " dB below 3 dB");
  expect(desk.train_seconds <= 900.0,
         "training took " + fmt(desk.train_seconds, 0) + " s, budget 900 s");
  return fmt(desk.quality_db, 2) + " dB improvement, " +
         std::to_string(desk.net.parameter_count()) + " params, " +
         fmt(desk.train_seconds, 0) + " s" + (desk.from_cache ? " (cached)" : "");
}

// 6. Search: 8x10 within budget/monotone/feasible, plus constraint pressure.
std::string criterion_search() {
  const auto t0 = std::chrono::steady_clock::now();
  GenomeBounds bounds;
  bounds.min_levels = 1;
  bounds.max_levels = 2;
  bounds.min_channels = 4;
  bounds.max_channels = 16;
  bounds.kernels = {3};
  bounds.min_hidden = 8;
  bounds.max_hidden = 24;

  SceneConfig scene_cfg = desk_scene_cfg();
  scene_cfg.duration_s = 1.0;
  const auto train_scenes = synth_scenes(scene_cfg, 6, 303);
  const auto eval_scenes = synth_scenes(scene_cfg, 3, 304);

  SearchConfig cfg;
  cfg.population = 8;
  cfg.generations = 10;
  cfg.mutation_rate = 0.25;
  cfg.budget_us = default_budget_us();
  cfg.train_steps_per_candidate = 25;
  cfg.batch_frames = 16;
  cfg.seed = 11;

  // main run with real wall-clock latency measurement
  const SearchResult result = evolve(cfg, bounds, train_scenes, eval_scenes);
  expect(result.best_record.feasible, "returned best violates the latency budget");
  expect(result.best_record.latency.median_us <= cfg.budget_us,
         "best median latency exceeds the budget");
  for (std::size_t i = 1; i < result.history.size(); ++i) {
    expect(result.history[i].best_quality >= result.history[i - 1].best_quality,
           "best feasible quality decreased between generations");
  }

  // constraint pressure, deterministic MAC-based latency model, 5 seeds
  const LatencyProvider model_latency = [](const NetworkInstance& n) {
    const double us = static_cast<double>(count_macs(n)) / 1000.0;
    return LatencyStats{us, us, 200};
  };
  SearchConfig pressure = cfg;
  pressure.population = 6;
  pressure.generations = 3;
  pressure.train_steps_per_candidate = 12;
  std::vector<long long> tight_macs, loose_macs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    pressure.seed = seed;
    pressure.budget_us = 250.0;  // 250k MACs under the model: tight but satisfiable
    tight_macs.push_back(
        evolve(pressure, bounds, train_scenes, eval_scenes, model_latency).best_record.macs);
    pressure.budget_us = 1e12;
    loose_macs.push_back(
        evolve(pressure, bounds, train_scenes, eval_scenes, model_latency).best_record.macs);
  }
  std::sort(tight_macs.begin(), tight_macs.end());
  std::sort(loose_macs.begin(), loose_macs.end());
  expect(tight_macs[2] <= loose_macs[2],
         "tight-budget median MACs " + std::to_string(tight_macs[2]) +
             " exceed unconstrained median " + std::to_string(loose_macs[2]));

  const double elapsed = seconds_since(t0);
  expect(elapsed <= 1800.0, "search criterion took " + fmt(elapsed, 0) + " s, budget 1800 s");
  return "best " + fmt(result.best_record.quality_db, 2) + " dB at " +
         fmt(result.best_record.latency.median_us, 0) + " us/frame; tight/loose median MACs " +
         std::to_string(tight_macs[2]) + "/" + std::to_string(loose_macs[2]) + "; " +
         fmt(elapsed, 0) + " s";
}

// 7. Pruning: >= 20% MAC reduction at <= 1 dB quality loss after fine-tuning.
std::string criterion_pruning() {
  const DeskModel desk = train_desk_model();
  const auto eval_scenes = desk_eval_scenes();

  PruneSchedule schedule;
  schedule.fraction_per_step = 0.08;
  schedule.finetune_steps = 90;
  schedule.passes = 3;
  schedule.finetune_lr = 0.002;
  schedule.batch_frames = 48;
  schedule.quality_floor_db = desk.quality_db - 1.0;

  Rng rng(mix_seed(kDeskSeed, 9));
  const PruneLoopResult result =
      prune_loop(desk.net, schedule, desk_train_scenes(), eval_scenes, rng);

  long long prev = result.report.macs_initial;
  for (const PruneStep& step : result.report.steps) {
    if (!step.kept) continue;
    expect(step.macs_after <= prev, "MACs increased inside the prune report");
    prev = step.macs_after;
  }
  const double reduction = result.report.mac_reduction();
  const double loss = desk.quality_db - result.report.quality_final;
  expect(reduction >= 0.20,
         "MAC reduction " + fmt(100 * reduction, 1) + "% below the 20% target");
  expect(loss <= 1.0, "quality loss " + fmt(loss, 2) + " dB exceeds 1 dB");
  return fmt(100 * reduction, 1) + "% MACs removed (" +
         std::to_string(result.report.macs_initial) + " -> " +
         std::to_string(result.report.macs_final) + "), quality " +
         fmt(desk.quality_db, 2) + " -> " + fmt(result.report.quality_final, 2) + " dB";
}

// 8. Real-time contract and the deployment-stack latency table.
std::string criterion_realtime() {
  const DeskModel desk = train_desk_model();
  const LatencyStats stats = measure_latency(desk.net);
  expect(stats.median_us <= 6000.0,
         "median per-frame compute " + fmt(stats.median_us, 0) + " us exceeds 6 ms");

  const LatencyBudget budget =
      latency_report(StftConfig{}, 6.0, default_stack_model());
  expect(std::abs(budget.total_ms - 70.94) < 1.0,
         "configured stack total " + fmt(budget.total_ms, 2) + " ms not around 71 ms");
  expect(budget.total_ms > 65.0 && budget.total_ms < 80.0,
         "stack total outside the around-75 ms regime");
  return "median " + fmt(stats.median_us, 0) + " us/frame (budget 6000), stack total " +
         fmt(budget.total_ms, 2) + " ms";
}

// 9. Staircase estimator validity against computed equilibria, both variants.
std::string criterion_staircase() {
  PsychometricListener listener;
  listener.srt50_db = -7.0;
  listener.slope = 0.17;
  std::string detail;
  for (StaircaseRule rule : {StaircaseRule::kOneUpOneDown, StaircaseRule::kTwoUpOneDown}) {
    StaircaseConfig cfg;
    cfg.rule = rule;
    const double p_star = staircase_equilibrium_word_prob(
        cfg.n_words, cfg.words_required, staircase_target_success_prob(rule));
    const double srt_star = analytic_srt(listener, p_star);
    double sum = 0.0;
    const int runs = 200;
    for (int r = 0; r < runs; ++r) {
      Rng rng(mix_seed(4242, static_cast<std::uint64_t>(r),
                       rule == StaircaseRule::kOneUpOneDown ? 0ULL : 1ULL));
      sum += run_staircase(listener, cfg, rng).srt_db;
    }
    const double mean_srt = sum / runs;
    const double bias = std::abs(mean_srt - srt_star);
    expect(bias <= 1.0, std::string(rule == StaircaseRule::kOneUpOneDown ? "1up1down"
                                                                         : "2up1down") +
                            " bias " + fmt(bias, 2) + " dB exceeds 1 dB (p* " +
                            fmt(p_star, 4) + ")");
    detail += std::string(rule == StaircaseRule::kOneUpOneDown ? "1u1d" : "2u1d") + " p*=" +
              fmt(p_star, 3) + " bias=" + fmt(bias, 2) + " dB; ";
  }
  return detail + "200 runs each";
}

// 10. End-to-end SRT analog with sign test, plus random-weight control.
std::string criterion_srt_end_to_end() {
  const DeskModel desk = train_desk_model();

  SceneConfig scene_cfg = desk_scene_cfg();
  scene_cfg.duration_s = 1.0;
  PsychometricListener listener;
  listener.srt50_db = 0.0;
  listener.slope = 0.25;
  StaircaseConfig staircase;
  staircase.start_snr_db = 6.0;
  staircase.max_trials = 120;

  const int runs = 20;
  int positive = 0;
  double delta_sum = 0.0;
  for (int r = 0; r < runs; ++r) {
    const auto table =
        measure_srt_improvement(desk.net, listener, scene_cfg, staircase, {0, 80},
                                mix_seed(9000, static_cast<std::uint64_t>(r)));
    const double delta = table[1].delta_srt_db;
    delta_sum += delta;
    if (delta > 0.0) ++positive;
  }
  const double p = sign_test_p(positive, runs);
  expect(delta_sum / runs > 0.0, "mean delta SRT not positive");
  expect(p < 0.05, "sign test p " + fmt(p, 4) + " not significant (positives " +
                       std::to_string(positive) + "/" + std::to_string(runs) + ")");

  // random-weight negative control
  Rng rng(mix_seed(kDeskSeed, 77));
  const NetworkInstance random_net = build_network(desk_genome(), rng);
  double control_sum = 0.0;
  const int control_runs = 8;
  for (int r = 0; r < control_runs; ++r) {
    const auto table =
        measure_srt_improvement(random_net, listener, scene_cfg, staircase, {0, 80},
                                mix_seed(9500, static_cast<std::uint64_t>(r)));
    control_sum += table[1].delta_srt_db;
  }
  const double control_mean = control_sum / control_runs;
  expect(control_mean <= 0.2, "random-weight control improved SRT by " +
                                  fmt(control_mean, 2) + " dB (> 0.2 dB)");
  return "delta SRT mean " + fmt(delta_sum / runs, 2) + " dB, sign test p " + fmt(p, 5) +
         " (" + std::to_string(positive) + "/" + std::to_string(runs) + " positive), control " +
         fmt(control_mean, 2) + " dB";
}

// 11. Preference search returns the grid argmax for unimodal oracles.
std::string criterion_preference() {
  Rng rng(606);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int peak = 5 * rng.uniform_int(0, 20);
    const double left = rng.uniform(0.05, 4.0);
    const double right = rng.uniform(0.05, 4.0);
    const auto oracle = [&](int ratio) {
      const double d = ratio - peak;
      return d < 0 ? left * d : -right * d;
    };
    int brute = 0;
    double best = -1e300;
    for (int r = 0; r <= 100; r += 5) {
      if (oracle(r) > best) {
        best = oracle(r);
        brute = r;
      }
    }
    const int found = preference_search(oracle, 5);
    expect(found == brute, "preference search returned " + std::to_string(found) +
                               ", argmax is " + std::to_string(brute));
    ++checked;
  }
  return std::to_string(checked) + " unimodal oracles, exact argmax each time";
}

// 12. Statistics fixtures.
std::string criterion_statistics() {
  const TTestResult fixture = paired_t_test({3.0, 5.0}, {1.0, 1.0});
  expect(std::abs(fixture.t - 3.0) < 1e-12, "t fixture is " + fmt(fixture.t, 6));
  expect(fixture.df == 1, "df fixture is " + std::to_string(fixture.df));

  const TTestResult zero = paired_t_test({1.0, -1.0}, {0.0, 0.0});
  expect(std::abs(zero.p_two_sided - 1.0) < 1e-12, "p(t=0) is " + fmt(zero.p_two_sided, 6));

  std::vector<double> x{1, 2, 3, 4, 5, 6};
  std::vector<double> y;
  for (double v : x) y.push_back(-3.0 * v + 2.0);
  expect(pearson_r(x, y) == -1.0, "pearson on affine data is not exactly -1");
  for (double& v : y) v = -v;
  expect(pearson_r(x, y) == 1.0, "pearson on affine data is not exactly +1");
  return "t=3/df=1, p(t=0)=1, pearson affine = +-1 exact";
}

struct Criterion {
  int id;
  std::string name;
  std::function<std::string()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "stft round trip", criterion_stft_round_trip},
      {2, "autodiff finite differences", criterion_autodiff},
      {3, "oracle-mask ceiling", criterion_oracle_mask},
      {4, "mixing law and chunk invariance", criterion_mixing_law},
      {5, "desk training quality", criterion_desk_training},
      {6, "latency-constrained search", criterion_search},
      {7, "structured pruning", criterion_pruning},
      {8, "real-time compute and stack budget", criterion_realtime},
      {9, "staircase validity", criterion_staircase},
      {10, "end-to-end SRT improvement", criterion_srt_end_to_end},
      {11, "preference search", criterion_preference},
      {12, "statistics fixtures", criterion_statistics},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--only" && i + 1 < argc) only = std::atoi(argv[i + 1]);
  }

  int failures = 0;
  for (const Criterion& criterion : criteria()) {
    if (only != 0 && criterion.id != only) continue;
    try {
      const std::string detail = criterion.run();
      std::cout << "[PASS] criterion " << criterion.id << ": " << criterion.name << " - "
                << detail << "\n";
    } catch (const std::exception& e) {
      std::cout << "[FAIL] criterion " << criterion.id << ": " << criterion.name << " - "
                << e.what() << "\n";
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}
