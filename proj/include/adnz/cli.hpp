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

// Command-line surface. Subcommands: denoise, train, search, prune,
// eval-srt, bench, stats. Configuration files are JSON; every run echoes the
// resolved configuration and seed. ADNZ_THREADS controls worker threads.

#ifndef ADNZ_CLI_HPP_
#define ADNZ_CLI_HPP_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adnz/eval.hpp"
#include "adnz/prune.hpp"
#include "adnz/runtime.hpp"
#include "adnz/search.hpp"
#include "json.hpp"

namespace adnz {

namespace cli_detail {

using nlohmann::json;

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return j;
}

inline StftConfig parse_stft(const json& j) {
  StftConfig cfg;
  if (j.contains("stft")) {
    const json& s = j["stft"];
    cfg.sample_rate = s.value("sample_rate", cfg.sample_rate);
    cfg.window_len = s.value("window_len", cfg.window_len);
    cfg.hop = s.value("hop", cfg.hop);
    cfg.fft_size = s.value("fft_size", cfg.fft_size);
  }
  validate(cfg);
  return cfg;
}

inline SceneConfig parse_scene(const json& j) {
  SceneConfig cfg;
  if (j.contains("scenes")) {
    const json& s = j["scenes"];
    cfg.duration_s = s.value("duration_s", cfg.duration_s);
    cfg.sample_rate = s.value("sample_rate", cfg.sample_rate);
    if (s.contains("noise")) cfg.noise = noise_from_string(s["noise"].get<std::string>());
    if (s.contains("snr_db")) {
      cfg.snr_min_db = s["snr_db"].at(0).get<double>();
      cfg.snr_max_db = s["snr_db"].at(1).get<double>();
    }
    if (s.contains("f0_hz")) {
      cfg.f0_min_hz = s["f0_hz"].at(0).get<double>();
      cfg.f0_max_hz = s["f0_hz"].at(1).get<double>();
    }
    cfg.syllable_rate_hz = s.value("syllable_rate_hz", cfg.syllable_rate_hz);
  }
  validate(cfg);
  return cfg;
}

inline int scene_count(const json& j, const char* key, int fallback) {
  if (j.contains("scenes") && j["scenes"].contains(key)) return j["scenes"][key].get<int>();
  return fallback;
}

inline Genome parse_genome(const json& j) {
  require_config(j.contains("genome"), "config: missing \"genome\" section");
  const json& g = j["genome"];
  Genome genome;
  genome.levels.clear();
  require_config(g.contains("levels") && g["levels"].is_array() && !g["levels"].empty(),
                 "config: genome.levels must be a non-empty array");
  for (const json& lv : g["levels"]) {
    GenomeLevel level;
    level.channels = lv.value("channels", level.channels);
    level.kernel = lv.value("kernel", level.kernel);
    level.stride = lv.value("stride", level.stride);
    level.skip = lv.value("skip", level.skip);
    genome.levels.push_back(level);
  }
  if (g.contains("bottleneck")) {
    genome.bottleneck = bottleneck_from_string(g["bottleneck"].get<std::string>());
  }
  genome.hidden = g.value("hidden", genome.hidden);
  if (g.contains("activation")) {
    genome.activation = activation_from_string(g["activation"].get<std::string>());
  }
  validate(genome);
  return genome;
}

inline HyperParams parse_train(const json& j) {
  HyperParams hp;
  if (j.contains("train")) {
    const json& t = j["train"];
    hp.learning_rate = t.value("learning_rate", hp.learning_rate);
    hp.batch_frames = t.value("batch_frames", hp.batch_frames);
    hp.steps = t.value("steps", hp.steps);
  }
  validate(hp);
  return hp;
}

inline PbtConfig parse_pbt(const json& j) {
  PbtConfig cfg;
  if (j.contains("pbt")) {
    const json& p = j["pbt"];
    cfg.population = p.value("population", cfg.population);
    cfg.rounds = p.value("rounds", cfg.rounds);
    cfg.steps_per_round = p.value("steps_per_round", cfg.steps_per_round);
    cfg.exploit_quantile = p.value("exploit_quantile", cfg.exploit_quantile);
    cfg.batch_frames = p.value("batch_frames", cfg.batch_frames);
    if (p.contains("perturb_factors")) {
      cfg.perturb_factors = p["perturb_factors"].get<std::vector<double>>();
    }
    if (p.contains("init_lrs")) cfg.init_lrs = p["init_lrs"].get<std::vector<double>>();
  }
  validate(cfg);
  return cfg;
}

inline GenomeBounds parse_bounds(const json& j) {
  GenomeBounds b;
  if (j.contains("bounds")) {
    const json& s = j["bounds"];
    if (s.contains("levels")) {
      b.min_levels = s["levels"].at(0).get<int>();
      b.max_levels = s["levels"].at(1).get<int>();
    }
    if (s.contains("channels")) {
      b.min_channels = s["channels"].at(0).get<int>();
      b.max_channels = s["channels"].at(1).get<int>();
    }
    if (s.contains("hidden")) {
      b.min_hidden = s["hidden"].at(0).get<int>();
      b.max_hidden = s["hidden"].at(1).get<int>();
    }
    if (s.contains("kernels")) b.kernels = s["kernels"].get<std::vector<int>>();
    if (s.contains("strides")) b.strides = s["strides"].get<std::vector<int>>();
    if (s.contains("bottlenecks")) {
      b.bottlenecks.clear();
      for (const json& k : s["bottlenecks"]) {
        b.bottlenecks.push_back(bottleneck_from_string(k.get<std::string>()));
      }
    }
    if (s.contains("activations")) {
      b.activations.clear();
      for (const json& a : s["activations"]) {
        b.activations.push_back(activation_from_string(a.get<std::string>()));
      }
    }
  }
  validate(b);
  return b;
}

inline SearchConfig parse_search(const json& j, std::uint64_t seed) {
  SearchConfig cfg;
  cfg.seed = seed;
  if (j.contains("search")) {
    const json& s = j["search"];
    cfg.population = s.value("population", cfg.population);
    cfg.generations = s.value("generations", cfg.generations);
    cfg.mutation_rate = s.value("mutation_rate", cfg.mutation_rate);
    cfg.budget_us = s.value("budget_us", cfg.budget_us);
    cfg.train_steps_per_candidate =
        s.value("train_steps_per_candidate", cfg.train_steps_per_candidate);
    cfg.batch_frames = s.value("batch_frames", cfg.batch_frames);
    cfg.candidate_lr = s.value("candidate_lr", cfg.candidate_lr);
  }
  validate(cfg);
  return cfg;
}

inline PruneSchedule parse_prune(const json& j) {
  PruneSchedule s;
  if (j.contains("prune")) {
    const json& p = j["prune"];
    s.fraction_per_step = p.value("fraction_per_step", s.fraction_per_step);
    s.finetune_steps = p.value("finetune_steps", s.finetune_steps);
    s.passes = p.value("passes", s.passes);
    s.quality_floor_db = p.value("quality_floor_db", s.quality_floor_db);
    s.finetune_lr = p.value("finetune_lr", s.finetune_lr);
    s.batch_frames = p.value("batch_frames", s.batch_frames);
  }
  validate(s);
  return s;
}

inline PsychometricListener parse_listener(const json& j) {
  PsychometricListener listener;
  if (j.contains("srt") && j["srt"].contains("listener")) {
    const json& l = j["srt"]["listener"];
    listener.srt50_db = l.value("srt50_db", listener.srt50_db);
    listener.slope = l.value("slope", listener.slope);
  }
  validate(listener);
  return listener;
}

inline StaircaseConfig parse_staircase(const json& j) {
  StaircaseConfig cfg;
  if (j.contains("srt") && j["srt"].contains("staircase")) {
    const json& s = j["srt"]["staircase"];
    cfg.start_snr_db = s.value("start_snr_db", cfg.start_snr_db);
    cfg.max_trials = s.value("max_trials", cfg.max_trials);
    if (s.contains("rule")) {
      const std::string rule = s["rule"].get<std::string>();
      if (rule == "1up1down") {
        cfg.rule = StaircaseRule::kOneUpOneDown;
      } else if (rule == "2up1down") {
        cfg.rule = StaircaseRule::kTwoUpOneDown;
      } else {
        throw ConfigError("config: unknown staircase rule " + rule);
      }
    }
  }
  validate(cfg);
  return cfg;
}

inline std::vector<int> parse_mix_ratios(const json& j) {
  std::vector<int> ratios = {0, 50, 80};
  if (j.contains("srt") && j["srt"].contains("mix_ratios")) {
    ratios = j["srt"]["mix_ratios"].get<std::vector<int>>();
  }
  return ratios;
}

inline std::vector<std::pair<std::string, double>> parse_stack(const std::string& spec) {
  if (spec.empty()) return default_stack_model();
  std::vector<std::pair<std::string, double>> stack;
  std::istringstream stream(spec);
  std::string part;
  while (std::getline(stream, part, ',')) {
    const auto eq = part.find('=');
    require_config(eq != std::string::npos, "bench: stack entries look like name=ms");
    stack.emplace_back(part.substr(0, eq), std::stod(part.substr(eq + 1)));
  }
  return stack;
}

inline void echo_config(const std::string& subcommand, const json& j, std::uint64_t seed) {
  json resolved = j;
  resolved["seed"] = seed;
  std::cout << "[adnz] " << subcommand << " resolved config: " << resolved.dump() << "\n";
  std::cout << "[adnz] seed: " << seed << "\n";
}

inline std::uint64_t resolve_seed(const json& j, std::int64_t flag_seed) {
  if (flag_seed >= 0) return static_cast<std::uint64_t>(flag_seed);
  return j.value("seed", 1ULL);
}

}  // namespace cli_detail

inline int run_cli(std::vector<std::string> args) {
  using cli_detail::json;
  CLI::App app{"adnz: latency-constrained streaming speech denoiser toolkit"};
  app.require_subcommand(1);
  app.footer("Environment: ADNZ_THREADS sets the worker thread count (default 1).");

  // denoise
  auto* denoise = app.add_subcommand("denoise", "Denoise a WAV file through the streamer");
  std::string dn_in, dn_out, dn_model;
  int dn_mix = 80;
  denoise->add_option("--in", dn_in, "input WAV (PCM16 or float32)")->required();
  denoise->add_option("--out", dn_out, "output WAV (float32 mono)")->required();
  denoise->add_option("--model", dn_model, "ADNZ model file; omit for identity mask");
  denoise->add_option("--mix", dn_mix, "mixing ratio 0..100 (default 80)");

  // train
  auto* train = app.add_subcommand("train", "Train a model on synthetic scenes");
  std::string tr_config, tr_out, tr_loss_csv;
  bool tr_pbt = false;
  std::int64_t tr_seed = -1;
  train->add_option("--config", tr_config, "JSON config")->required();
  train->add_option("--out", tr_out, "output model path")->required();
  train->add_option("--loss-csv", tr_loss_csv, "write the loss/lineage trace CSV here");
  train->add_flag("--pbt", tr_pbt, "use Population Based Training");
  train->add_option("--seed", tr_seed, "override the config seed");

  // search
  auto* search = app.add_subcommand("search", "Evolutionary architecture search");
  std::string se_config, se_out, se_replay;
  std::int64_t se_seed = -1;
  search->add_option("--config", se_config, "JSON config")->required();
  search->add_option("--out", se_out, "output directory")->required();
  search->add_option("--latency-replay", se_replay,
                     "latency cache CSV (recorded on miss, replayed on hit)");
  search->add_option("--seed", se_seed, "override the config seed");

  // prune
  auto* prune = app.add_subcommand("prune", "Iterative structured pruning with fine-tuning");
  std::string pr_config, pr_model, pr_out, pr_report;
  std::int64_t pr_seed = -1;
  prune->add_option("--config", pr_config, "JSON config")->required();
  prune->add_option("--model", pr_model, "input model")->required();
  prune->add_option("--out", pr_out, "output model path")->required();
  prune->add_option("--report-csv", pr_report, "prune report CSV path");
  prune->add_option("--seed", pr_seed, "override the config seed");

  // eval-srt
  auto* evalsrt = app.add_subcommand("eval-srt", "Simulated SRT staircases through the model");
  std::string ev_config, ev_model, ev_out, ev_trials;
  std::int64_t ev_seed = -1;
  evalsrt->add_option("--config", ev_config, "JSON config")->required();
  evalsrt->add_option("--model", ev_model, "model file")->required();
  evalsrt->add_option("--out", ev_out, "SRT table CSV path");
  evalsrt->add_option("--trials-csv", ev_trials, "per-trial staircase log CSV path");
  evalsrt->add_option("--seed", ev_seed, "override the config seed");

  // bench
  auto* bench = app.add_subcommand("bench", "Measure per-frame latency and print the budget");
  std::string be_model, be_csv, be_stack;
  bench->add_option("--model", be_model, "model file")->required();
  bench->add_option("--csv", be_csv, "latency budget CSV path");
  bench->add_option("--stack", be_stack, "stack stages, e.g. phone=10,streamer=10,wireless=20");

  // stats
  auto* stats = app.add_subcommand("stats", "Run a statistic over a two-column CSV");
  std::string st_csv, st_test;
  stats->add_option("--csv", st_csv, "two-column CSV (x, y)")->required();
  stats->add_option("--test", st_test, "ttest or pearson")->required();

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*denoise) {
      require_config(dn_mix >= 0 && dn_mix <= 100, "denoise: --mix must be in 0..100");
      AudioBuffer in = read_wav(dn_in);
      StftConfig cfg;
      if (in.sample_rate != cfg.sample_rate) {
        std::cout << "[adnz] resampling " << in.sample_rate << " Hz -> " << cfg.sample_rate
                  << " Hz (linear)\n";
        in = resample_linear(in, cfg.sample_rate);
      }
      NetworkInstance net;
      const bool have_model = !dn_model.empty();
      if (have_model) net = load_model(dn_model);
      std::cout << "[adnz] denoise mix=" << dn_mix << " model="
                << (have_model ? dn_model : "<identity>") << "\n";
      StreamingDenoiser denoiser(cfg, have_model ? &net : nullptr, dn_mix);
      write_wav(dn_out, denoiser.process(in));
    } else if (*train) {
      const json cfg = cli_detail::load_json(tr_config);
      const std::uint64_t seed = cli_detail::resolve_seed(cfg, tr_seed);
      cli_detail::echo_config("train", cfg, seed);
      const StftConfig stft_cfg = cli_detail::parse_stft(cfg);
      const SceneConfig scene_cfg = cli_detail::parse_scene(cfg);
      const Genome genome = cli_detail::parse_genome(cfg);
      const int n_train = cli_detail::scene_count(cfg, "count", 16);
      const int n_eval = cli_detail::scene_count(cfg, "eval_count", 4);
      const auto train_scenes = synth_scenes(scene_cfg, n_train, mix_seed(seed, 1));
      const auto eval_scenes = synth_scenes(scene_cfg, n_eval, mix_seed(seed, 2));

      NetworkInstance net;
      if (tr_pbt) {
        const PbtConfig pbt_cfg = cli_detail::parse_pbt(cfg);
        const PbtResult result =
            pbt_run(genome, pbt_cfg, train_scenes, eval_scenes, seed, stft_cfg);
        net = result.best_net;
        if (!tr_loss_csv.empty()) write_lineage_csv(tr_loss_csv, result);
        std::cout << "[adnz] pbt best quality: " << format_double(result.best_quality, 4)
                  << " dB SI-SDR improvement (lr " << result.best_learning_rate << ")\n";
      } else {
        const HyperParams hp = cli_detail::parse_train(cfg);
        Rng rng(mix_seed(seed, 3));
        net = build_network(genome, rng);
        Rng train_rng(mix_seed(seed, 4));
        const TrainResult result = train_sgd(net, train_scenes, hp, train_rng, stft_cfg);
        if (!tr_loss_csv.empty()) write_loss_csv(tr_loss_csv, result, hp.learning_rate);
        const double quality = mean_sisdr_improvement(net, eval_scenes, stft_cfg);
        std::cout << "[adnz] trained quality: " << format_double(quality, 4)
                  << " dB SI-SDR improvement over " << result.loss_trace.size() << " steps\n";
      }
      save_model(tr_out, net);
      std::cout << "[adnz] model written to " << tr_out << " ("
                << count_macs(net) << " MACs/frame)\n";
    } else if (*search) {
      const json cfg = cli_detail::load_json(se_config);
      const std::uint64_t seed = cli_detail::resolve_seed(cfg, se_seed);
      cli_detail::echo_config("search", cfg, seed);
      const StftConfig stft_cfg = cli_detail::parse_stft(cfg);
      const SceneConfig scene_cfg = cli_detail::parse_scene(cfg);
      const SearchConfig search_cfg = cli_detail::parse_search(cfg, seed);
      const GenomeBounds bounds =
          cli_detail::parse_bounds(cfg.contains("search") ? cfg["search"] : cfg);
      const auto train_scenes =
          synth_scenes(scene_cfg, cli_detail::scene_count(cfg, "count", 8), mix_seed(seed, 1));
      const auto eval_scenes =
          synth_scenes(scene_cfg, cli_detail::scene_count(cfg, "eval_count", 4),
                       mix_seed(seed, 2));

      std::filesystem::create_directories(se_out);
      LatencyProvider provider;
      std::unique_ptr<LatencyReplayCache> cache;
      if (!se_replay.empty()) {
        cache = std::make_unique<LatencyReplayCache>(
            se_replay, [](const NetworkInstance& n) { return measure_latency(n); });
        provider = [&cache](const NetworkInstance& n) { return (*cache)(n); };
      }
      const SearchResult result =
          evolve(search_cfg, bounds, train_scenes, eval_scenes, provider, stft_cfg);
      if (cache) cache->save();

      write_search_history_csv(se_out + "/history.csv", result);
      std::ofstream genome_out(se_out + "/best_genome.txt");
      genome_out << genome_to_text(result.best_genome);
      save_model(se_out + "/best_model.adnz", result.best_net);
      std::cout << "[adnz] best quality " << format_double(result.best_record.quality_db, 4)
                << " dB at " << format_double(result.best_record.latency.median_us, 1)
                << " us/frame, " << result.best_record.macs << " MACs/frame\n";
    } else if (*prune) {
      const json cfg = cli_detail::load_json(pr_config);
      const std::uint64_t seed = cli_detail::resolve_seed(cfg, pr_seed);
      cli_detail::echo_config("prune", cfg, seed);
      const StftConfig stft_cfg = cli_detail::parse_stft(cfg);
      const SceneConfig scene_cfg = cli_detail::parse_scene(cfg);
      const PruneSchedule schedule = cli_detail::parse_prune(cfg);
      const auto train_scenes =
          synth_scenes(scene_cfg, cli_detail::scene_count(cfg, "count", 8), mix_seed(seed, 1));
      const auto eval_scenes =
          synth_scenes(scene_cfg, cli_detail::scene_count(cfg, "eval_count", 4),
                       mix_seed(seed, 2));
      const NetworkInstance net = load_model(pr_model);
      Rng rng(mix_seed(seed, 5));
      const PruneLoopResult result =
          prune_loop(net, schedule, train_scenes, eval_scenes, rng, stft_cfg);
      save_model(pr_out, result.net);
      if (!pr_report.empty()) write_prune_csv(pr_report, result.report);
      std::cout << "[adnz] macs " << result.report.macs_initial << " -> "
                << result.report.macs_final << " ("
                << format_fixed(100.0 * result.report.mac_reduction(), 1)
                << "% reduction), quality " << format_fixed(result.report.quality_initial, 2)
                << " -> " << format_fixed(result.report.quality_final, 2) << " dB\n";
    } else if (*evalsrt) {
      const json cfg = cli_detail::load_json(ev_config);
      const std::uint64_t seed = cli_detail::resolve_seed(cfg, ev_seed);
      cli_detail::echo_config("eval-srt", cfg, seed);
      const StftConfig stft_cfg = cli_detail::parse_stft(cfg);
      const SceneConfig scene_cfg = cli_detail::parse_scene(cfg);
      const PsychometricListener listener = cli_detail::parse_listener(cfg);
      const StaircaseConfig staircase = cli_detail::parse_staircase(cfg);
      const std::vector<int> ratios = cli_detail::parse_mix_ratios(cfg);
      const NetworkInstance net = load_model(ev_model);
      const auto table =
          measure_srt_improvement(net, listener, scene_cfg, staircase, ratios, seed, stft_cfg);
      std::cout << "[adnz] mix_ratio  srt_db  delta_db  trials converged\n";
      for (const SrtTableEntry& e : table) {
        std::cout << "[adnz] " << e.mix_ratio << "  " << format_fixed(e.result.srt_db, 2)
                  << "  " << format_fixed(e.delta_srt_db, 2) << "  " << e.result.n_trials
                  << "  " << (e.result.converged ? "yes" : "no") << "\n";
      }
      if (!ev_out.empty()) write_srt_csv(ev_out, table);
      if (!ev_trials.empty()) write_srt_trials_csv(ev_trials, table);
    } else if (*bench) {
      const NetworkInstance net = load_model(be_model);
      const LatencyStats stats_result = measure_latency(net);
      const auto stack = cli_detail::parse_stack(be_stack);
      const LatencyBudget budget = latency_report(StftConfig{}, stats_result, stack);
      std::cout << "[adnz] median " << format_double(stats_result.median_us, 1) << " us, p95 "
                << format_double(stats_result.p95_us, 1) << " us over "
                << stats_result.n_frames << " frames; " << count_macs(net) << " MACs/frame\n";
      std::cout << format_latency_budget(budget);
      if (!be_csv.empty()) write_latency_budget_csv(be_csv, budget);
    } else if (*stats) {
      const auto rows = read_csv(st_csv);
      std::vector<double> x, y;
      for (const auto& row : rows) {
        if (row.size() < 2) continue;
        try {
          const double a = std::stod(row[0]);
          const double b = std::stod(row[1]);
          x.push_back(a);
          y.push_back(b);
        } catch (const std::exception&) {
          // header row
        }
      }
      if (st_test == "ttest") {
        const TTestResult r = paired_t_test(x, y);
        std::cout << "t=" << format_double(r.t, 6) << " df=" << r.df
                  << " p=" << format_double(r.p_two_sided, 6) << "\n";
      } else if (st_test == "pearson") {
        std::cout << "r=" << format_double(pearson_r(x, y), 6) << "\n";
      } else {
        throw ConfigError("stats: --test must be ttest or pearson");
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace adnz

#endif  // ADNZ_CLI_HPP_
