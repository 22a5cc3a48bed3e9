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

// Synthetic scene generation (speech proxy + white/pink/babble noise),
// supervised mask training with momentum SGD, and Population Based Training.

#ifndef ADNZ_TRAIN_HPP_
#define ADNZ_TRAIN_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "adnz/audio.hpp"
#include "adnz/common.hpp"
#include "adnz/dsp.hpp"
#include "adnz/network.hpp"

namespace adnz {

inline constexpr double kSgdMomentum = 0.9;
inline constexpr double kLearningRateMin = 1e-6;
inline constexpr double kLearningRateMax = 1.0;
// Global L2 gradient-norm ceiling; keeps momentum SGD stable at the large
// early-training gradients of the mask loss.
inline constexpr double kGradClipNorm = 25.0;

enum class NoiseKind { kWhite, kPink, kBabble };

inline NoiseKind noise_from_string(const std::string& s) {
  if (s == "white") return NoiseKind::kWhite;
  if (s == "pink") return NoiseKind::kPink;
  if (s == "babble") return NoiseKind::kBabble;
  throw ConfigError("unknown noise kind: " + s);
}

// Parameters of the synthetic speech-in-noise scenes.
struct SceneConfig {
  double f0_min_hz = 110.0;
  double f0_max_hz = 220.0;
  double am_rate_min_hz = 2.0;     // formant-like amplitude modulation
  double am_rate_max_hz = 6.0;
  double syllable_rate_hz = 3.0;   // on/off envelope
  NoiseKind noise = NoiseKind::kWhite;
  double snr_min_db = 0.0;
  double snr_max_db = 0.0;
  double duration_s = 1.0;
  int sample_rate = 22050;
};

inline void validate(const SceneConfig& cfg) {
  require_config(cfg.snr_min_db <= cfg.snr_max_db && cfg.snr_min_db >= -12.0 &&
                     cfg.snr_max_db <= 12.0,
                 "scene: snr range must lie within [-12, 12] dB");
  require_config(cfg.duration_s >= 1.0, "scene: duration must be >= 1 s");
  require_config(cfg.sample_rate > 0, "scene: sample rate must be positive");
  require_config(cfg.f0_min_hz > 0 && cfg.f0_min_hz <= cfg.f0_max_hz, "scene: bad f0 range");
}

namespace scene_detail {

// Harmonic stack with vibrato, per-harmonic AM and a smoothed syllable gate.
inline AudioBuffer speech_proxy(int n, const SceneConfig& cfg, Rng& rng) {
  AudioBuffer out;
  out.sample_rate = cfg.sample_rate;
  out.samples.assign(static_cast<std::size_t>(n), 0.0);

  const double f0 = rng.uniform(cfg.f0_min_hz, cfg.f0_max_hz);
  const double vibrato_rate = rng.uniform(4.0, 7.0);
  const double vibrato_depth = rng.uniform(0.005, 0.02);
  const double syllable_phase = rng.uniform(0.0, 2.0 * kPi);
  const int n_harmonics = 8;

  double amp[n_harmonics], am_rate[n_harmonics], am_depth[n_harmonics];
  double am_phase[n_harmonics], phase[n_harmonics];
  for (int h = 0; h < n_harmonics; ++h) {
    amp[h] = (1.0 / (h + 1)) * rng.uniform(0.6, 1.0);
    am_rate[h] = rng.uniform(cfg.am_rate_min_hz, cfg.am_rate_max_hz);
    am_depth[h] = rng.uniform(0.1, 0.4);
    am_phase[h] = rng.uniform(0.0, 2.0 * kPi);
    phase[h] = rng.uniform(0.0, 2.0 * kPi);
  }

  const double dt = 1.0 / cfg.sample_rate;
  double base_phase = rng.uniform(0.0, 2.0 * kPi);
  double peak = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    const double inst_f0 = f0 * (1.0 + vibrato_depth * std::sin(2.0 * kPi * vibrato_rate * t));
    base_phase += 2.0 * kPi * inst_f0 * dt;
    const double gate_wave = std::sin(2.0 * kPi * cfg.syllable_rate_hz * t + syllable_phase);
    const double gate = 1.0 / (1.0 + std::exp(-8.0 * gate_wave));
    double v = 0.0;
    for (int h = 0; h < n_harmonics; ++h) {
      const double am = 1.0 + am_depth[h] * std::sin(2.0 * kPi * am_rate[h] * t + am_phase[h]);
      v += amp[h] * am * std::sin((h + 1) * base_phase + phase[h]);
    }
    const double s = gate * v;
    out.samples[static_cast<std::size_t>(i)] = s;
    peak = std::max(peak, std::abs(s));
  }
  if (peak > 0.0) {
    const double norm = 0.5 / peak;
    for (double& v : out.samples) v *= norm;
  }
  return out;
}

inline AudioBuffer white_noise(int n, int sr, Rng& rng) {
  AudioBuffer out;
  out.sample_rate = sr;
  out.samples.resize(static_cast<std::size_t>(n));
  for (auto& v : out.samples) v = rng.uniform(-1.0, 1.0);
  return out;
}

// Paul Kellet's economy pinking filter over white noise.
inline AudioBuffer pink_noise(int n, int sr, Rng& rng) {
  AudioBuffer out;
  out.sample_rate = sr;
  out.samples.resize(static_cast<std::size_t>(n));
  double b0 = 0, b1 = 0, b2 = 0;
  for (auto& v : out.samples) {
    const double w = rng.uniform(-1.0, 1.0);
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    v = 0.25 * (b0 + b1 + b2 + w * 0.1848);
  }
  return out;
}

// Babble proxy: several detuned speech proxies talking over each other.
inline AudioBuffer babble_noise(int n, const SceneConfig& cfg, Rng& rng) {
  AudioBuffer out;
  out.sample_rate = cfg.sample_rate;
  out.samples.assign(static_cast<std::size_t>(n), 0.0);
  const int talkers = 6;
  for (int k = 0; k < talkers; ++k) {
    SceneConfig tcfg = cfg;
    tcfg.f0_min_hz = cfg.f0_min_hz * 0.7;
    tcfg.f0_max_hz = cfg.f0_max_hz * 1.4;
    tcfg.syllable_rate_hz = cfg.syllable_rate_hz * rng.uniform(0.7, 1.4);
    const AudioBuffer talker = speech_proxy(n, tcfg, rng);
    for (int i = 0; i < n; ++i) out.samples[static_cast<std::size_t>(i)] += talker.samples[static_cast<std::size_t>(i)];
  }
  for (double& v : out.samples) v /= talkers;
  return out;
}

}  // namespace scene_detail

// Deterministic scene synthesis; the clean component is the speech proxy.
inline Mixture synth_scene(const SceneConfig& cfg, Rng& rng) {
  validate(cfg);
  const int n = static_cast<int>(std::lround(cfg.duration_s * cfg.sample_rate));
  const AudioBuffer clean = scene_detail::speech_proxy(n, cfg, rng);
  AudioBuffer noise;
  switch (cfg.noise) {
    case NoiseKind::kWhite: noise = scene_detail::white_noise(n, cfg.sample_rate, rng); break;
    case NoiseKind::kPink: noise = scene_detail::pink_noise(n, cfg.sample_rate, rng); break;
    case NoiseKind::kBabble: noise = scene_detail::babble_noise(n, cfg, rng); break;
  }
  const double snr = rng.uniform(cfg.snr_min_db, cfg.snr_max_db);
  return mix_at_snr(clean, noise, snr, rng);
}

inline std::vector<Mixture> synth_scenes(const SceneConfig& cfg, int count,
                                         std::uint64_t seed) {
  std::vector<Mixture> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    scenes.push_back(synth_scene(cfg, rng));
  }
  return scenes;
}

// ---- supervised training ----------------------------------------------------

struct HyperParams {
  double learning_rate = 0.002;
  int batch_frames = 48;
  int steps = 500;
};

inline void validate(const HyperParams& hp) {
  require_config(hp.learning_rate >= kLearningRateMin && hp.learning_rate <= kLearningRateMax,
                 "hyperparams: learning_rate out of [1e-6, 1]");
  require_config(hp.batch_frames >= 1 && hp.steps >= 0, "hyperparams: bad batch/steps");
}

// Frame features and compressed cIRM targets, precomputed once per scene.
struct PreparedScene {
  std::vector<Tensor<double>> features;
  std::vector<Tensor<double>> targets;
};

inline PreparedScene prepare_scene(const Mixture& mix, const StftConfig& cfg) {
  const Spectrogram noisy = stft(mix.mixed, cfg);
  const Spectrogram clean = stft(mix.clean, cfg);
  PreparedScene out;
  out.features = normalized_features(noisy);
  out.targets = mask_targets(compute_cirm(clean, noisy));
  return out;
}

inline std::vector<PreparedScene> prepare_scenes(const std::vector<Mixture>& scenes,
                                                 const StftConfig& cfg) {
  std::vector<PreparedScene> out(scenes.size());
  parallel_for(static_cast<int>(scenes.size()), [&](int i) {
    out[static_cast<std::size_t>(i)] = prepare_scene(scenes[static_cast<std::size_t>(i)], cfg);
  });
  return out;
}

struct TrainResult {
  std::vector<double> loss_trace;
};

namespace train_detail {

// One SGD-with-momentum step on a random frame window. Returns the loss.
inline double sgd_step(NetworkInstance& net, std::vector<Tensor<double>>& momentum,
                       const std::vector<PreparedScene>& prepared, const HyperParams& hp,
                       Rng& rng) {
  const PreparedScene& scene =
      prepared[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(prepared.size()) - 1))];
  const int n_frames = static_cast<int>(scene.features.size());
  const int window = std::min(hp.batch_frames, n_frames);
  const int start = rng.uniform_int(0, n_frames - window);

  std::vector<Tensor<double>> features(scene.features.begin() + start,
                                       scene.features.begin() + start + window);
  std::vector<Tensor<double>> targets(scene.targets.begin() + start,
                                      scene.targets.begin() + start + window);

  Tape<double> tape;
  const TapeNet tn = register_network(tape, net, true);
  const auto masks = forward_on_tape(tape, tn, features);
  const Var loss = mask_mse_loss(tape, masks, targets);
  const double loss_value = tape.value(loss).data[0];
  tape.backward(loss);

  double grad_sq = 0.0;
  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    for (const double g : tape.grad(tn.weight_vars[i]).data) grad_sq += g * g;
  }
  const double grad_norm = std::sqrt(grad_sq);
  const double clip = grad_norm > kGradClipNorm ? kGradClipNorm / grad_norm : 1.0;

  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    const Tensor<double>& g = tape.grad(tn.weight_vars[i]);
    Tensor<double>& v = momentum[i];
    Tensor<double>& w = net.weights[i];
    for (std::size_t j = 0; j < w.numel(); ++j) {
      v.data[j] = kSgdMomentum * v.data[j] + clip * g.data[j];
      w.data[j] -= hp.learning_rate * v.data[j];
    }
  }
  return loss_value;
}

}  // namespace train_detail

// Mask-approximation MSE training with momentum SGD (momentum 0.9). The
// network is updated in place; the trace holds the loss at every step.
inline TrainResult train_sgd(NetworkInstance& net, const std::vector<PreparedScene>& prepared,
                             const HyperParams& hp, Rng& rng) {
  validate(hp);
  require(!prepared.empty(), "train_sgd: no scenes");
  TrainResult result;
  result.loss_trace.reserve(static_cast<std::size_t>(hp.steps));
  std::vector<Tensor<double>> momentum;
  momentum.reserve(net.weights.size());
  for (const auto& w : net.weights) momentum.emplace_back(w.shape);

  for (int step = 0; step < hp.steps; ++step) {
    double loss = 0.0;
    try {
      loss = train_detail::sgd_step(net, momentum, prepared, hp, rng);
    } catch (const NumericError& e) {
      throw NumericError("train_sgd: diverged at step " + std::to_string(step) + ": " +
                         e.what());
    }
    if (!std::isfinite(loss)) {
      throw NumericError("train_sgd: diverged at step " + std::to_string(step));
    }
    result.loss_trace.push_back(loss);
  }
  return result;
}

inline TrainResult train_sgd(NetworkInstance& net, const std::vector<Mixture>& scenes,
                             const HyperParams& hp, Rng& rng,
                             const StftConfig& cfg = StftConfig{}) {
  require(!scenes.empty(), "train_sgd: no scenes");
  return train_sgd(net, prepare_scenes(scenes, cfg), hp, rng);
}

// ---- Population Based Training ----------------------------------------------

struct PbtConfig {
  int population = 8;
  int rounds = 5;
  int steps_per_round = 100;
  double exploit_quantile = 0.25;
  std::vector<double> perturb_factors = {0.8, 1.25};
  int batch_frames = 48;
  double init_lr_min = 2e-4;
  double init_lr_max = 4e-3;
  std::vector<double> init_lrs;  // optional explicit grid, cycled over members
  bool identical_init = false;   // all members start from member 0's weights
};

inline void validate(const PbtConfig& cfg) {
  require_config(cfg.population >= 4, "pbt: population must be >= 4");
  require_config(cfg.exploit_quantile > 0.0 && cfg.exploit_quantile <= 0.25,
                 "pbt: exploit_quantile must be in (0, 0.25]");
  require_config(cfg.rounds >= 1 && cfg.steps_per_round >= 1, "pbt: bad rounds/steps");
  require_config(!cfg.perturb_factors.empty(), "pbt: no perturb factors");
}

struct PbtEvent {
  int round = 0;
  std::string event;  // "exploit" | "explore"
  int member = 0;
  int source = -1;     // exploit source member, -1 for explore
  double learning_rate = 0.0;
};

struct PbtRoundStats {
  int round = 0;
  std::vector<double> member_quality;
  std::vector<double> member_lr;
  double best_quality = 0.0;  // running maximum over all rounds
};

struct PbtResult {
  NetworkInstance best_net;  // champion snapshot across all rounds
  double best_quality = -1e9;
  double best_learning_rate = 0.0;
  std::vector<PbtEvent> lineage;
  std::vector<PbtRoundStats> rounds;
  std::vector<double> final_lrs;
};

// Each round every member trains; the bottom exploit-quantile copies weights
// and learning rate from a random top-quantile member, then perturbs the
// learning rate. Top-quantile members are never overwritten. Member work can
// run in parallel; selection happens serially in member-index order.
inline PbtResult pbt_run(const Genome& genome, const PbtConfig& cfg,
                         const std::vector<Mixture>& train_scenes,
                         const std::vector<Mixture>& val_scenes, std::uint64_t seed,
                         const StftConfig& stft_cfg = StftConfig{}) {
  validate(cfg);
  validate(genome);
  require(!train_scenes.empty() && !val_scenes.empty(), "pbt: empty scene sets");

  const auto prepared = prepare_scenes(train_scenes, stft_cfg);
  const int pop = cfg.population;

  struct Member {
    NetworkInstance net;
    double lr = 0.0;
    double quality = -1e9;
  };
  std::vector<Member> members(static_cast<std::size_t>(pop));
  for (int m = 0; m < pop; ++m) {
    Rng init_rng(mix_seed(seed, 0xbeef, static_cast<std::uint64_t>(m)));
    Member& mem = members[static_cast<std::size_t>(m)];
    mem.net = cfg.identical_init && m > 0 ? members[0].net
                                          : build_network(genome, init_rng);
    if (!cfg.init_lrs.empty()) {
      mem.lr = cfg.init_lrs[static_cast<std::size_t>(m) % cfg.init_lrs.size()];
    } else {
      // log-uniform spread
      const double t = pop == 1 ? 0.0 : static_cast<double>(m) / (pop - 1);
      mem.lr = cfg.init_lr_min * std::pow(cfg.init_lr_max / cfg.init_lr_min, t);
    }
  }
  if (cfg.identical_init) {
    for (int m = 1; m < pop; ++m) members[static_cast<std::size_t>(m)].net = members[0].net;
  }

  PbtResult result;
  const int bottom_k = std::max(1, static_cast<int>(std::floor(cfg.exploit_quantile * pop)));

  for (int round = 0; round < cfg.rounds; ++round) {
    parallel_for(pop, [&](int m) {
      Member& mem = members[static_cast<std::size_t>(m)];
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(round) + 1,
                       static_cast<std::uint64_t>(m)));
      HyperParams hp;
      hp.learning_rate = mem.lr;
      hp.batch_frames = cfg.batch_frames;
      hp.steps = cfg.steps_per_round;
      train_sgd(mem.net, prepared, hp, rng);
      mem.quality = mean_sisdr_improvement(mem.net, val_scenes, stft_cfg);
    });

    // Champion snapshot: returned-best quality is monotone by construction.
    PbtRoundStats stats;
    stats.round = round;
    for (int m = 0; m < pop; ++m) {
      const Member& mem = members[static_cast<std::size_t>(m)];
      stats.member_quality.push_back(mem.quality);
      stats.member_lr.push_back(mem.lr);
      if (mem.quality > result.best_quality) {
        result.best_quality = mem.quality;
        result.best_learning_rate = mem.lr;
        result.best_net = mem.net;
      }
    }
    stats.best_quality = result.best_quality;
    result.rounds.push_back(stats);

    if (round + 1 == cfg.rounds) break;

    // Selection, serial in member-index order.
    std::vector<int> ranked(static_cast<std::size_t>(pop));
    for (int m = 0; m < pop; ++m) ranked[static_cast<std::size_t>(m)] = m;
    std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) {
      return members[static_cast<std::size_t>(a)].quality >
             members[static_cast<std::size_t>(b)].quality;
    });
    Rng select_rng(mix_seed(seed, 0x5e1ec7ULL, static_cast<std::uint64_t>(round)));
    for (int r = pop - bottom_k; r < pop; ++r) {
      const int loser = ranked[static_cast<std::size_t>(r)];
      const int winner =
          ranked[static_cast<std::size_t>(select_rng.uniform_int(0, bottom_k - 1))];
      Member& dst = members[static_cast<std::size_t>(loser)];
      const Member& src = members[static_cast<std::size_t>(winner)];
      dst.net = src.net;
      dst.lr = src.lr;
      result.lineage.push_back({round, "exploit", loser, winner, dst.lr});
      dst.lr = std::clamp(dst.lr * select_rng.pick(cfg.perturb_factors), kLearningRateMin,
                          kLearningRateMax);
      result.lineage.push_back({round, "explore", loser, -1, dst.lr});
    }
  }

  for (const auto& mem : members) result.final_lrs.push_back(mem.lr);
  return result;
}

// Loss/lineage CSV: step-level loss traces and PBT events share one schema
// (step, member, loss, learning_rate, event).
inline void write_loss_csv(const std::string& path, const TrainResult& result,
                           double learning_rate) {
  CsvWriter csv(path);
  csv.row({"step", "member", "loss", "learning_rate", "event"});
  for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
    csv.row({std::to_string(i), "0", format_double(result.loss_trace[i]),
             format_double(learning_rate), "sgd"});
  }
}

inline void write_lineage_csv(const std::string& path, const PbtResult& result) {
  CsvWriter csv(path);
  csv.row({"step", "member", "loss", "learning_rate", "event"});
  for (std::size_t r = 0; r < result.rounds.size(); ++r) {
    const PbtRoundStats& stats = result.rounds[r];
    for (std::size_t m = 0; m < stats.member_quality.size(); ++m) {
      csv.row({std::to_string(stats.round), std::to_string(m),
               format_double(-stats.member_quality[m]), format_double(stats.member_lr[m]),
               "eval"});
    }
  }
  for (const PbtEvent& ev : result.lineage) {
    csv.row({std::to_string(ev.round), std::to_string(ev.member), "",
             format_double(ev.learning_rate),
             ev.event + (ev.source >= 0 ? "_from_" + std::to_string(ev.source) : "")});
  }
}

}  // namespace adnz

#endif  // ADNZ_TRAIN_HPP_
