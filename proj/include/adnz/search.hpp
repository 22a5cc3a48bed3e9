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

// Closed-loop evolutionary architecture search. Candidates get a short proxy
// training, a quality score (mean SI-SDR improvement) and a measured
// per-frame latency; the latency budget is a hard feasibility constraint,
// never a penalty term. Mutation-only evolution with tournament selection
// and a protected feasible elite.

#ifndef ADNZ_SEARCH_HPP_
#define ADNZ_SEARCH_HPP_

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "adnz/bench.hpp"
#include "adnz/common.hpp"
#include "adnz/train.hpp"

namespace adnz {

// Default compute budget: one hop of real time on one core.
inline double default_budget_us(const StftConfig& cfg = StftConfig{}) {
  return 1e6 * cfg.hop / cfg.sample_rate;
}

struct GenomeBounds {
  int min_levels = 1, max_levels = 4;
  int min_channels = 4, max_channels = 64;
  std::vector<int> kernels = {3, 5};
  std::vector<int> strides = {1, 2};
  int min_hidden = 8, max_hidden = 128;
  std::vector<BottleneckKind> bottlenecks = {BottleneckKind::kGru, BottleneckKind::kLstm,
                                             BottleneckKind::kConv};
  std::vector<Activation> activations = {Activation::kRelu, Activation::kTanh};
  std::vector<int> skip_choices = {0, 1};
};

inline void validate(const GenomeBounds& b) {
  require_config(b.min_levels >= 1 && b.min_levels <= b.max_levels && b.max_levels <= 4,
                 "bounds: bad level range");
  require_config(b.min_channels >= 4 && b.min_channels <= b.max_channels &&
                     b.max_channels <= 64,
                 "bounds: bad channel range");
  require_config(b.min_hidden >= 8 && b.min_hidden <= b.max_hidden && b.max_hidden <= 128,
                 "bounds: bad hidden range");
  require_config(!b.kernels.empty() && !b.strides.empty() && !b.bottlenecks.empty() &&
                     !b.activations.empty() && !b.skip_choices.empty(),
                 "bounds: empty choice list");
}

inline GenomeLevel sample_level(const GenomeBounds& b, Rng& rng) {
  GenomeLevel lv;
  lv.channels = rng.uniform_int(b.min_channels, b.max_channels);
  lv.kernel = rng.pick(b.kernels);
  lv.stride = rng.pick(b.strides);
  lv.skip = rng.pick(b.skip_choices) != 0;
  return lv;
}

// Uniform sample over the discrete space. With at most 4 levels of stride 2
// on a power-of-two bin count every draw is shape-legal.
inline Genome sample_genome(const GenomeBounds& bounds, Rng& rng) {
  validate(bounds);
  Genome g;
  const int levels = rng.uniform_int(bounds.min_levels, bounds.max_levels);
  for (int i = 0; i < levels; ++i) g.levels.push_back(sample_level(bounds, rng));
  g.bottleneck = rng.pick(bounds.bottlenecks);
  g.hidden = rng.uniform_int(bounds.min_hidden, bounds.max_hidden);
  g.activation = rng.pick(bounds.activations);
  validate(g);
  return g;
}

// Per-gene independent resampling with probability mutation_rate. The result
// is validated; pathological spaces get a bounded number of retries.
inline Genome mutate_genome(const Genome& g, Rng& rng, const GenomeBounds& bounds,
                            double mutation_rate) {
  validate(bounds);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Genome out = g;
    if (rng.chance(mutation_rate)) {
      const int new_levels = rng.uniform_int(bounds.min_levels, bounds.max_levels);
      while (static_cast<int>(out.levels.size()) > new_levels) out.levels.pop_back();
      while (static_cast<int>(out.levels.size()) < new_levels) {
        out.levels.push_back(sample_level(bounds, rng));
      }
    }
    for (GenomeLevel& lv : out.levels) {
      if (rng.chance(mutation_rate)) lv.channels = rng.uniform_int(bounds.min_channels, bounds.max_channels);
      if (rng.chance(mutation_rate)) lv.kernel = rng.pick(bounds.kernels);
      if (rng.chance(mutation_rate)) lv.stride = rng.pick(bounds.strides);
      if (rng.chance(mutation_rate)) lv.skip = rng.pick(bounds.skip_choices) != 0;
    }
    if (rng.chance(mutation_rate)) out.bottleneck = rng.pick(bounds.bottlenecks);
    if (rng.chance(mutation_rate)) out.hidden = rng.uniform_int(bounds.min_hidden, bounds.max_hidden);
    if (rng.chance(mutation_rate)) out.activation = rng.pick(bounds.activations);
    try {
      validate(out);
      return out;
    } catch (const Error&) {
      // resample until shape-legal
    }
  }
  throw SearchError("mutate_genome: no valid offspring after 100 attempts");
}

struct FitnessRecord {
  Genome genome;
  double quality_db = 0.0;  // mean SI-SDR improvement on eval scenes
  LatencyStats latency;
  bool feasible = false;
  long long macs = 0;
};

struct SearchConfig {
  int population = 8;
  int generations = 10;
  double mutation_rate = 0.2;
  double budget_us = 5986.0;
  int train_steps_per_candidate = 40;
  int batch_frames = 24;
  double candidate_lr = 0.002;
  std::uint64_t seed = 1;
};

inline void validate(const SearchConfig& cfg) {
  require_config(cfg.population >= 4, "search: population must be >= 4");
  require_config(cfg.budget_us > 0.0, "search: budget must be positive");
  require_config(cfg.generations >= 1, "search: generations must be >= 1");
  require_config(cfg.mutation_rate >= 0.0 && cfg.mutation_rate <= 1.0,
                 "search: mutation rate out of [0, 1]");
}

struct GenerationStats {
  int generation = 0;
  double best_quality = 0.0;  // best feasible candidate
  double mean_quality = 0.0;
  double feasible_fraction = 0.0;
  long long best_macs = 0;
};

struct SearchResult {
  Genome best_genome;
  FitnessRecord best_record;
  NetworkInstance best_net;
  std::vector<GenerationStats> history;
  std::vector<std::vector<FitnessRecord>> generations;  // every evaluated candidate
};

// Feasible candidates rank strictly above all infeasible ones; quality breaks
// ties within a class.
inline bool fitness_better(const FitnessRecord& a, const FitnessRecord& b) {
  if (a.feasible != b.feasible) return a.feasible;
  return a.quality_db > b.quality_db;
}

// topology fingerprint for latency replay keys (covers pruned nets too)
inline std::string topology_fingerprint(const NetworkTopology& t) {
  std::string s = std::to_string(t.in_bins) + "|" + to_string(t.activation) + "|" +
                  to_string(t.bottleneck) + "|" + std::to_string(t.hidden);
  for (const auto& lv : t.enc) {
    s += "|" + std::to_string(lv.c_out) + "," + std::to_string(lv.kernel) + "," +
         std::to_string(lv.stride) + "," + (lv.skip ? "1" : "0");
  }
  for (int c : t.dec_channels) s += "|" + std::to_string(c);
  return to_hex(fnv1a64(s));
}

// Records measured latencies keyed by topology fingerprint so that reruns
// (and tests) replay identical numbers instead of re-timing.
class LatencyReplayCache {
 public:
  LatencyReplayCache(std::string path, LatencyProvider inner)
      : path_(std::move(path)), inner_(std::move(inner)) {
    if (std::ifstream in(path_); in) {
      for (const auto& row : read_csv(path_)) {
        if (row.size() != 4 || row[0] == "fingerprint") continue;
        entries_[row[0]] = LatencyStats{std::stod(row[1]), std::stod(row[2]), std::stoi(row[3])};
      }
    }
  }

  LatencyStats operator()(const NetworkInstance& net) {
    const std::string key = topology_fingerprint(net.topo);
    const auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
    const LatencyStats stats = inner_(net);
    entries_[key] = stats;
    dirty_ = true;
    return stats;
  }

  void save() {
    if (!dirty_) return;
    CsvWriter csv(path_);
    csv.row({"fingerprint", "median_us", "p95_us", "n_frames"});
    for (const auto& [key, stats] : entries_) {
      csv.row({key, format_double(stats.median_us), format_double(stats.p95_us),
               std::to_string(stats.n_frames)});
    }
    dirty_ = false;
  }

 private:
  std::string path_;
  LatencyProvider inner_;
  std::map<std::string, LatencyStats> entries_;
  bool dirty_ = false;
};

// Evolutionary loop. Per generation: quality evaluation (parallelizable, one
// derived seed per slot), then serialized latency measurement, then selection
// in candidate-index order. The best feasible candidate is carried over with
// its cached record, so the best-feasible-quality series is monotone.
inline SearchResult evolve(const SearchConfig& cfg, const GenomeBounds& bounds,
                           const std::vector<Mixture>& train_scenes,
                           const std::vector<Mixture>& eval_scenes,
                           LatencyProvider latency = {},
                           const StftConfig& stft_cfg = StftConfig{}) {
  validate(cfg);
  validate(bounds);
  require(!train_scenes.empty() && !eval_scenes.empty(), "evolve: empty scene sets");
  if (!latency) latency = [](const NetworkInstance& net) { return measure_latency(net); };

  const auto prepared = prepare_scenes(train_scenes, stft_cfg);

  struct Candidate {
    Genome genome;
    NetworkInstance net;
    FitnessRecord record;
    bool cached = false;  // elite carried over, skip re-evaluation
  };

  Rng rng(cfg.seed);
  std::vector<Candidate> population(static_cast<std::size_t>(cfg.population));
  for (auto& cand : population) cand.genome = sample_genome(bounds, rng);

  SearchResult result;

  for (int gen = 0; gen < cfg.generations; ++gen) {
    parallel_for(cfg.population, [&](int slot) {
      Candidate& cand = population[static_cast<std::size_t>(slot)];
      if (cand.cached) return;
      Rng member_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(gen),
                              static_cast<std::uint64_t>(slot)));
      cand.net = build_network(cand.genome, member_rng);
      HyperParams hp;
      hp.learning_rate = cfg.candidate_lr;
      hp.batch_frames = cfg.batch_frames;
      hp.steps = cfg.train_steps_per_candidate;
      train_sgd(cand.net, prepared, hp, member_rng);
      cand.record.genome = cand.genome;
      cand.record.quality_db = mean_sisdr_improvement(cand.net, eval_scenes, stft_cfg);
      cand.record.macs = count_macs(cand.net);
    });
    // Latency measurements run serially, in slot order, after the barrier.
    for (auto& cand : population) {
      if (cand.cached) continue;
      cand.record.latency = latency(cand.net);
      cand.record.feasible = cand.record.latency.median_us <= cfg.budget_us;
    }

    std::vector<FitnessRecord> gen_records;
    for (const auto& cand : population) gen_records.push_back(cand.record);
    result.generations.push_back(gen_records);

    std::vector<int> ranked(static_cast<std::size_t>(cfg.population));
    for (int i = 0; i < cfg.population; ++i) ranked[static_cast<std::size_t>(i)] = i;
    std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) {
      return fitness_better(population[static_cast<std::size_t>(a)].record,
                            population[static_cast<std::size_t>(b)].record);
    });

    const Candidate& top = population[static_cast<std::size_t>(ranked[0])];
    if (!top.record.feasible) {
      double fastest = top.record.latency.median_us;
      for (const auto& cand : population) {
        fastest = std::min(fastest, cand.record.latency.median_us);
      }
      throw SearchError("evolve: budget infeasible; fastest candidate runs at " +
                        format_double(fastest) + " us/frame against a budget of " +
                        format_double(cfg.budget_us) + " us");
    }

    GenerationStats stats;
    stats.generation = gen;
    stats.best_quality = top.record.quality_db;
    stats.best_macs = top.record.macs;
    double quality_sum = 0.0;
    int feasible_count = 0;
    for (const auto& cand : population) {
      quality_sum += cand.record.quality_db;
      feasible_count += cand.record.feasible ? 1 : 0;
    }
    stats.mean_quality = quality_sum / cfg.population;
    stats.feasible_fraction = static_cast<double>(feasible_count) / cfg.population;
    result.history.push_back(stats);

    if (gen + 1 == cfg.generations) {
      result.best_genome = top.genome;
      result.best_record = top.record;
      result.best_net = top.net;
      break;
    }

    // Next generation: protected elite plus mutated tournament winners.
    std::vector<Candidate> next(static_cast<std::size_t>(cfg.population));
    next[0] = top;
    next[0].cached = true;
    const auto rank_of = [&](int slot) {
      for (int r = 0; r < cfg.population; ++r) {
        if (ranked[static_cast<std::size_t>(r)] == slot) return r;
      }
      return cfg.population;
    };
    for (int i = 1; i < cfg.population; ++i) {
      const int a = rng.uniform_int(0, cfg.population - 1);
      const int b = rng.uniform_int(0, cfg.population - 1);
      const int winner = rank_of(a) <= rank_of(b) ? a : b;
      next[static_cast<std::size_t>(i)].genome = mutate_genome(
          population[static_cast<std::size_t>(winner)].genome, rng, bounds, cfg.mutation_rate);
    }
    population = std::move(next);
  }
  return result;
}

inline void write_search_history_csv(const std::string& path, const SearchResult& result) {
  CsvWriter csv(path);
  csv.row({"generation", "candidate", "quality_db", "median_us", "macs", "feasible"});
  for (std::size_t gen = 0; gen < result.generations.size(); ++gen) {
    const auto& records = result.generations[gen];
    for (std::size_t i = 0; i < records.size(); ++i) {
      const FitnessRecord& r = records[i];
      csv.row({std::to_string(gen), std::to_string(i), format_double(r.quality_db),
               format_double(r.latency.median_us), std::to_string(r.macs),
               r.feasible ? "1" : "0"});
    }
  }
}

}  // namespace adnz

#endif  // ADNZ_SEARCH_HPP_
