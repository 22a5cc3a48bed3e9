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

// Simulated psychoacoustic evaluation: logistic listeners, adaptive SRT
// staircases (default 1-up/1-down on a >=4-of-5-words criterion, with a
// 2-up/1-down variant), SRT measurement through the denoiser, mixing-ratio
// preference search, and paired statistics (t-test, Pearson r).

#ifndef ADNZ_EVAL_HPP_
#define ADNZ_EVAL_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "adnz/common.hpp"
#include "adnz/train.hpp"

namespace adnz {

// Logistic psychometric function: p_word(snr) = 1 / (1 + e^(-4 s (snr - srt50))).
struct PsychometricListener {
  double srt50_db = -7.0;
  double slope = 0.17;  // probability per dB at the midpoint

  double p_word(double snr_db) const {
    return 1.0 / (1.0 + std::exp(-4.0 * slope * (snr_db - srt50_db)));
  }
};

inline void validate(const PsychometricListener& l) {
  require_config(l.slope > 0.0, "listener: slope must be positive");
}

// Independent Bernoulli(p_word) draw per word.
inline int listener_words_correct(const PsychometricListener& listener, double snr_db,
                                  int n_words, Rng& rng) {
  require_config(n_words >= 1, "listener: need at least one word");
  validate(listener);
  const double p = listener.p_word(snr_db);
  int correct = 0;
  for (int w = 0; w < n_words; ++w) {
    if (rng.chance(p)) ++correct;
  }
  return correct;
}

enum class StaircaseRule {
  kOneUpOneDown,  // one step up on failure, one down on success
  kTwoUpOneDown,  // two steps up on failure, one down on success
};

struct StaircaseConfig {
  double start_snr_db = 0.0;
  std::vector<double> step_schedule_db = {4.0, 2.0, 1.0};
  std::vector<int> shrink_at_reversals = {2, 4};  // total-reversal milestones
  int reversals_to_stop = 6;                      // at the final step size
  int max_trials = 200;
  int n_words = 5;
  int words_required = 4;  // sentence counts as understood at >= this many
  StaircaseRule rule = StaircaseRule::kOneUpOneDown;
};

inline void validate(const StaircaseConfig& cfg) {
  require_config(!cfg.step_schedule_db.empty(), "staircase: empty step schedule");
  for (double s : cfg.step_schedule_db) require_config(s > 0.0, "staircase: step must be > 0");
  require_config(cfg.shrink_at_reversals.size() + 1 == cfg.step_schedule_db.size(),
                 "staircase: need one shrink milestone between consecutive steps");
  require_config(cfg.n_words >= 1 && cfg.words_required >= 1 &&
                     cfg.words_required <= cfg.n_words,
                 "staircase: bad word counts");
  require_config(cfg.max_trials >= 1 && cfg.reversals_to_stop >= 1, "staircase: bad limits");
}

struct StaircaseTrialRecord {
  double snr_db = 0.0;
  int words_correct = 0;
  double step_db = 0.0;
};

struct SrtResult {
  double srt_db = 0.0;  // mean presented SNR over final-phase trials
  int n_trials = 0;
  bool converged = false;  // >= reversals_to_stop reversals at the final step
  int reversals = 0;
  std::vector<StaircaseTrialRecord> history;
};

// Adaptive staircase over an arbitrary trial oracle
// (snr -> words understood). Success moves one step harder; failure moves
// one (or two, per rule) step easier; the step shrinks at the configured
// reversal milestones.
inline SrtResult run_staircase_with(const std::function<int(double)>& trial,
                                    const StaircaseConfig& cfg) {
  validate(cfg);
  SrtResult result;
  double snr = cfg.start_snr_db;
  std::size_t step_idx = 0;
  int prev_direction = 0;
  int final_phase_reversals = 0;
  double final_phase_sum = 0.0;
  int final_phase_count = 0;
  const std::size_t final_idx = cfg.step_schedule_db.size() - 1;

  for (int t = 0; t < cfg.max_trials; ++t) {
    const double step = cfg.step_schedule_db[step_idx];
    const bool in_final_phase = step_idx == final_idx;
    const int correct = trial(snr);
    result.history.push_back({snr, correct, step});
    if (in_final_phase) {
      final_phase_sum += snr;
      ++final_phase_count;
    }

    const bool success = correct >= cfg.words_required;
    const int direction = success ? -1 : +1;
    if (prev_direction != 0 && direction != prev_direction) {
      ++result.reversals;
      if (in_final_phase) ++final_phase_reversals;
      for (std::size_t m = 0; m < cfg.shrink_at_reversals.size(); ++m) {
        if (result.reversals == cfg.shrink_at_reversals[m]) step_idx = m + 1;
      }
    }
    prev_direction = direction;

    const double magnitude =
        (!success && cfg.rule == StaircaseRule::kTwoUpOneDown) ? 2.0 * step : step;
    snr += direction * magnitude;
    require(std::isfinite(snr), "staircase: snr diverged");

    if (final_phase_reversals >= cfg.reversals_to_stop) {
      result.converged = true;
      break;
    }
  }
  result.n_trials = static_cast<int>(result.history.size());
  result.srt_db = final_phase_count > 0 ? final_phase_sum / final_phase_count
                                        : cfg.start_snr_db;
  return result;
}

inline SrtResult run_staircase(const PsychometricListener& listener, const StaircaseConfig& cfg,
                               Rng& rng) {
  return run_staircase_with(
      [&](double snr) { return listener_words_correct(listener, snr, cfg.n_words, rng); }, cfg);
}

// ---- staircase equilibrium analysis ------------------------------------------

// P(Binomial(n, p) >= k)
inline double binomial_tail(int n, int k, double p) {
  double tail = 0.0;
  for (int i = k; i <= n; ++i) {
    double log_term = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
    log_term += i * std::log(std::max(p, 1e-300)) +
                (n - i) * std::log(std::max(1.0 - p, 1e-300));
    tail += std::exp(log_term);
  }
  return std::min(tail, 1.0);
}

// Sentence-success probability the staircase equilibrates at: the step rule
// balances when P(success) equals down/(down+up) of the step magnitudes.
inline double staircase_target_success_prob(StaircaseRule rule) {
  return rule == StaircaseRule::kOneUpOneDown ? 0.5 : 2.0 / 3.0;
}

// Word-level probability p* solving P(Binomial(n_words, p) >= required) =
// target, by bisection.
inline double staircase_equilibrium_word_prob(int n_words, int required, double target) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (binomial_tail(n_words, required, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// SNR at which the listener's word probability equals p* (inverse logistic).
inline double analytic_srt(const PsychometricListener& listener, double p_star) {
  validate(listener);
  require(p_star > 0.0 && p_star < 1.0, "analytic_srt: p* must be in (0,1)");
  return listener.srt50_db + std::log(p_star / (1.0 - p_star)) / (4.0 * listener.slope);
}

// ---- SRT through the denoiser -------------------------------------------------

struct SrtTableEntry {
  int mix_ratio = 0;
  SrtResult result;
  double delta_srt_db = 0.0;  // SRT(0%) - SRT(ratio); positive is better
};

// Scene synthesis at an explicit SNR (the staircase's nominal level), outside
// the SceneConfig's own SNR range.
inline Mixture synth_scene_at_snr(const SceneConfig& cfg, double snr_db, Rng& rng) {
  SceneConfig pinned = cfg;
  pinned.snr_min_db = 0.0;
  pinned.snr_max_db = 0.0;
  validate(pinned);
  const int n = static_cast<int>(std::lround(cfg.duration_s * cfg.sample_rate));
  const AudioBuffer clean = scene_detail::speech_proxy(n, cfg, rng);
  AudioBuffer noise;
  switch (cfg.noise) {
    case NoiseKind::kWhite: noise = scene_detail::white_noise(n, cfg.sample_rate, rng); break;
    case NoiseKind::kPink: noise = scene_detail::pink_noise(n, cfg.sample_rate, rng); break;
    case NoiseKind::kBabble: noise = scene_detail::babble_noise(n, cfg, rng); break;
  }
  return mix_at_snr(clean, noise, snr_db, rng);
}

// For each mixing ratio, runs a staircase whose trials synthesize a scene at
// the nominal SNR, enhance it at that ratio, and hand the listener an
// effective SNR equal to the output SI-SDR versus the clean reference.
inline std::vector<SrtTableEntry> measure_srt_improvement(
    const NetworkInstance& net, const PsychometricListener& listener,
    const SceneConfig& scene_cfg, const StaircaseConfig& staircase_cfg,
    std::vector<int> mix_ratios, std::uint64_t seed,
    const StftConfig& stft_cfg = StftConfig{}) {
  validate(listener);
  if (std::find(mix_ratios.begin(), mix_ratios.end(), 0) == mix_ratios.end()) {
    mix_ratios.insert(mix_ratios.begin(), 0);
  }

  std::vector<SrtTableEntry> table;
  double srt_dry = 0.0;
  for (std::size_t idx = 0; idx < mix_ratios.size(); ++idx) {
    const int ratio = mix_ratios[idx];
    require_config(ratio >= 0 && ratio <= 100, "srt: mix ratio out of 0..100");
    int trial_counter = 0;
    // Trial seeds are shared across ratios (paired design): staircases for
    // different ratios see the same scene realizations per trial index.
    const std::function<int(double)> trial = [&](double nominal_snr) {
      Rng trial_rng(mix_seed(seed, static_cast<std::uint64_t>(trial_counter++)));
      const Mixture mix = synth_scene_at_snr(scene_cfg, nominal_snr, trial_rng);
      const AudioBuffer out = enhance_offline(net, mix.mixed, stft_cfg, ratio);
      const double effective_snr = si_sdr_settled(mix.clean, out, stft_cfg);
      return listener_words_correct(listener, effective_snr, staircase_cfg.n_words, trial_rng);
    };

    SrtTableEntry entry;
    entry.mix_ratio = ratio;
    entry.result = run_staircase_with(trial, staircase_cfg);
    if (ratio == 0) srt_dry = entry.result.srt_db;
    table.push_back(std::move(entry));
  }
  for (SrtTableEntry& entry : table) {
    entry.delta_srt_db = srt_dry - entry.result.srt_db;
  }
  return table;
}

inline void write_srt_csv(const std::string& path, const std::vector<SrtTableEntry>& table) {
  CsvWriter csv(path);
  csv.row({"mix_ratio", "srt_db", "delta_srt_db", "n_trials", "converged"});
  for (const SrtTableEntry& e : table) {
    csv.row({std::to_string(e.mix_ratio), format_double(e.result.srt_db),
             format_double(e.delta_srt_db), std::to_string(e.result.n_trials),
             e.result.converged ? "1" : "0"});
  }
}

// Per-trial log across all ratios of a measurement table.
inline void write_srt_trials_csv(const std::string& path,
                                 const std::vector<SrtTableEntry>& table) {
  CsvWriter csv(path);
  csv.row({"mix_ratio", "trial", "snr_db", "words_correct", "step_db"});
  for (const SrtTableEntry& e : table) {
    for (std::size_t t = 0; t < e.result.history.size(); ++t) {
      const StaircaseTrialRecord& rec = e.result.history[t];
      csv.row({std::to_string(e.mix_ratio), std::to_string(t), format_double(rec.snr_db),
               std::to_string(rec.words_correct), format_double(rec.step_db)});
    }
  }
}

// ---- mixing-ratio preference search -------------------------------------------

// Interval halving over the ratio grid {0, step, ..., 100} using pairwise
// comparisons of adjacent midpoints. Returns the argmax grid point for
// strictly unimodal oracles; a constant oracle lands on the lowest grid
// point (documented tie-break).
inline int preference_search(const std::function<double(int)>& oracle, int step_percent) {
  require_config(step_percent >= 1 && step_percent <= 100 && 100 % step_percent == 0,
                 "preference_search: step must divide 100");
  const int n = 100 / step_percent + 1;
  std::vector<double> cache(static_cast<std::size_t>(n),
                            std::numeric_limits<double>::quiet_NaN());
  const auto value = [&](int i) {
    double& slot = cache[static_cast<std::size_t>(i)];
    if (std::isnan(slot)) {
      slot = oracle(i * step_percent);
      if (!std::isfinite(slot)) {
        throw NumericError("preference_search: oracle returned a non-finite score at " +
                           std::to_string(i * step_percent) + "%");
      }
    }
    return slot;
  };

  int lo = 0, hi = n - 1;
  while (hi - lo >= 2) {
    const int m1 = (lo + hi) / 2;
    const int m2 = m1 + 1;
    if (value(m1) < value(m2)) {
      lo = m2;
    } else {
      hi = m1;
    }
  }
  const int best = (hi > lo && value(hi) > value(lo)) ? hi : lo;
  return best * step_percent;
}

// ---- statistics ---------------------------------------------------------------

namespace stats_detail {

// Continued-fraction core of the regularized incomplete beta (modified Lentz).
inline double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 3e-15) break;
  }
  return h;
}

}  // namespace stats_detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0 && x >= 0.0 && x <= 1.0, "incomplete_beta: bad arguments");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log(1.0 - x);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * stats_detail::betacf(a, b, x) / a;
  }
  return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(b) - std::lgamma(a) +
                        b * std::log(1.0 - x) + a * std::log(x)) *
                   stats_detail::betacf(b, a, 1.0 - x) / b;
}

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double p_two_sided = 1.0;
};

// Paired t-test: d = x - y, t = mean(d) / (sd(d)/sqrt(n)), df = n-1; the
// two-sided p comes from the t-distribution via the regularized incomplete
// beta.
inline TTestResult paired_t_test(const std::vector<double>& x, const std::vector<double>& y) {
  require_shape(x.size() == y.size(), "t-test: length mismatch (" + std::to_string(x.size()) +
                                          " vs " + std::to_string(y.size()) + ")");
  const int n = static_cast<int>(x.size());
  require(n >= 2, "t-test: need at least two pairs");
  std::vector<double> d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)];
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double var = ss / (n - 1);
  if (var <= 0.0) throw NumericError("t-test: differences have zero variance");

  TTestResult result;
  result.df = n - 1;
  result.t = mean / std::sqrt(var / n);
  const double df = static_cast<double>(result.df);
  result.p_two_sided = incomplete_beta(df / 2.0, 0.5, df / (df + result.t * result.t));
  return result;
}

// Sample Pearson correlation coefficient.
inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  require_shape(x.size() == y.size(), "pearson: length mismatch");
  const int n = static_cast<int>(x.size());
  require(n >= 2, "pearson: need at least two pairs");
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[static_cast<std::size_t>(i)];
    my += y[static_cast<std::size_t>(i)];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dx = x[static_cast<std::size_t>(i)] - mx;
    const double dy = y[static_cast<std::size_t>(i)] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw NumericError("pearson: constant input");
  return sxy / std::sqrt(sxx * syy);
}

// Exact two-sided sign test: p = 2 * min(P(X <= k), P(X >= k)), X ~ Bin(n, 1/2).
inline double sign_test_p(int n_positive, int n) {
  require(n >= 1 && n_positive >= 0 && n_positive <= n, "sign_test: bad counts");
  const double upper = binomial_tail(n, n_positive, 0.5);
  const double lower = 1.0 - binomial_tail(n, n_positive + 1, 0.5);
  return std::min(1.0, 2.0 * std::min(upper, lower));
}

}  // namespace adnz

#endif  // ADNZ_EVAL_HPP_
