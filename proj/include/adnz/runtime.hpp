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

// The streaming denoiser: ring-buffered frame scheduler, per-frame network
// inference, WOLA synthesis, a delay-aligned dry path and 0..100% dry/wet
// mixing. Output sample n is
//     (1 - a/100) * dry[n - D] + (a/100) * wet[n - D],   D = window_len,
// so a mixing ratio of 0 passes the input through bit-exactly, delayed by
// exactly one window. The first window_len output samples are silence while
// the pipeline primes. Output cadence equals input cadence regardless of how
// the input is chunked.

#ifndef ADNZ_RUNTIME_HPP_
#define ADNZ_RUNTIME_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "adnz/bench.hpp"
#include "adnz/common.hpp"
#include "adnz/dsp.hpp"
#include "adnz/network.hpp"

namespace adnz {

namespace runtime_detail {

// Power-of-two ring addressed by absolute stream position.
class SlidingBuffer {
 public:
  explicit SlidingBuffer(std::size_t min_capacity) {
    std::size_t cap = 1;
    while (cap < min_capacity) cap <<= 1;
    buf_.assign(cap, 0.0);
    mask_ = cap - 1;
  }
  double get(long long pos) const { return buf_[static_cast<std::size_t>(pos) & mask_]; }
  void set(long long pos, double v) { buf_[static_cast<std::size_t>(pos) & mask_] = v; }
  void add(long long pos, double v) { buf_[static_cast<std::size_t>(pos) & mask_] += v; }

 private:
  std::vector<double> buf_;
  std::size_t mask_;
};

}  // namespace runtime_detail

class StreamingDenoiser {
 public:
  // A null network runs the identity-mask (bypass) path.
  StreamingDenoiser(const StftConfig& cfg, const NetworkInstance* net, int mix_ratio = 80)
      : cfg_(validated(cfg)),
        window_(hann_window(cfg.window_len)),
        fft_(cfg.fft_size),
        input_(ring_capacity(cfg)),
        wet_num_(ring_capacity(cfg)),
        wet_den_(ring_capacity(cfg)),
        scratch_(static_cast<std::size_t>(cfg.fft_size)),
        frame_bins_(static_cast<std::size_t>(cfg.n_bins())) {
    set_mix_ratio(mix_ratio);
    if (net != nullptr) {
      require_shape(net->topo.in_bins + 1 == cfg.n_bins(),
                    "denoiser: network bins do not match the STFT configuration");
      runner_.emplace(*net);
    } else {
      bypass_ = true;
    }
  }

  int mix_ratio() const { return mix_; }

  void set_mix_ratio(int ratio) {
    require_config(ratio >= 0 && ratio <= 100, "mix ratio must be in 0..100, got " +
                                                   std::to_string(ratio));
    mix_ = ratio;
  }

  // Forces the identity mask through the full STFT/WOLA path (testing and
  // model-free operation).
  void set_mask_bypass(bool bypass) { bypass_ = bypass; }

  int algorithmic_delay_samples() const { return cfg_.window_len; }

  // Feeds an arbitrary-length chunk; returns exactly chunk.size() samples.
  std::vector<double> push(std::span<const double> chunk) {
    std::vector<double> out;
    out.reserve(chunk.size());
    std::size_t offset = 0;
    while (offset < chunk.size()) {
      const std::size_t n =
          std::min(static_cast<std::size_t>(cfg_.hop), chunk.size() - offset);
      push_slice(chunk.data() + offset, n, out);
      offset += n;
    }
    return out;
  }

  // Convenience: whole-buffer processing. The output has the input's length
  // and is delayed by one window; the final window of input stays in the
  // pipeline, matching live-stream semantics.
  AudioBuffer process(const AudioBuffer& in) {
    require_config(in.sample_rate == cfg_.sample_rate, "denoiser: sample rate mismatch");
    AudioBuffer out;
    out.sample_rate = in.sample_rate;
    out.samples = push(in.samples);
    return out;
  }

 private:
  static const StftConfig& validated(const StftConfig& cfg) {
    validate(cfg);
    return cfg;
  }

  static std::size_t ring_capacity(const StftConfig& cfg) {
    return static_cast<std::size_t>(cfg.window_len + 4 * cfg.hop + 16);
  }

  void push_slice(const double* p, std::size_t n, std::vector<double>& out) {
    for (std::size_t i = 0; i < n; ++i) input_.set(total_in_ + static_cast<long long>(i), p[i]);
    total_in_ += static_cast<long long>(n);

    while (frames_done_ * cfg_.hop + cfg_.window_len <= total_in_) {
      process_frame(frames_done_);
      ++frames_done_;
    }

    const long long delay = cfg_.window_len;
    while (total_out_ < total_in_) {
      const long long q = total_out_ - delay;
      if (mix_ == 0) {
        // pure dry path, bit-exact delayed copy
        out.push_back(q >= 0 ? input_.get(q) : 0.0);
      } else {
        const double dry = q >= 0 ? input_.get(q) : 0.0;
        const double wet =
            q >= 0 ? wet_num_.get(q) / std::max(wet_den_.get(q), kWolaEnvelopeFloor) : 0.0;
        const double a = mix_ / 100.0;
        out.push_back((1.0 - a) * dry + a * wet);
      }
      ++total_out_;
    }
  }

  void process_frame(long long t) {
    const long long start = t * cfg_.hop;
    for (int n = 0; n < cfg_.window_len; ++n) {
      scratch_[static_cast<std::size_t>(n)] = {
          input_.get(start + n) * window_[static_cast<std::size_t>(n)], 0.0};
    }
    std::fill(scratch_.begin() + cfg_.window_len, scratch_.end(),
              std::complex<double>(0.0, 0.0));
    fft_.forward(scratch_);
    const int n_bins = cfg_.n_bins();
    std::copy(scratch_.begin(), scratch_.begin() + n_bins, frame_bins_.begin());

    if (!bypass_ && runner_) {
      const MaskFrame mask = runner_->step(frame_bins_.data(), n_bins);
      const auto masked = apply_mask(frame_bins_.data(), n_bins, mask);
      std::copy(masked.begin(), masked.end(), frame_bins_.begin());
    }

    for (int k = 0; k < n_bins; ++k) scratch_[static_cast<std::size_t>(k)] = frame_bins_[static_cast<std::size_t>(k)];
    for (int k = n_bins; k < cfg_.fft_size; ++k) {
      scratch_[static_cast<std::size_t>(k)] =
          std::conj(frame_bins_[static_cast<std::size_t>(cfg_.fft_size - k)]);
    }
    fft_.inverse(scratch_);

    const long long frame_end = start + cfg_.window_len;
    for (long long pos = wet_frontier_; pos < frame_end; ++pos) {
      wet_num_.set(pos, 0.0);
      wet_den_.set(pos, 0.0);
    }
    wet_frontier_ = std::max(wet_frontier_, frame_end);
    for (int n = 0; n < cfg_.window_len; ++n) {
      const double w = window_[static_cast<std::size_t>(n)];
      wet_num_.add(start + n, w * scratch_[static_cast<std::size_t>(n)].real());
      wet_den_.add(start + n, w * w);
    }
  }

  StftConfig cfg_;
  std::vector<double> window_;
  Fft fft_;
  runtime_detail::SlidingBuffer input_, wet_num_, wet_den_;
  std::optional<NetRunner<double>> runner_;
  bool bypass_ = false;
  int mix_ = 80;
  long long total_in_ = 0;
  long long total_out_ = 0;
  long long frames_done_ = 0;
  long long wet_frontier_ = 0;
  std::vector<std::complex<double>> scratch_;
  std::vector<std::complex<double>> frame_bins_;
};

// ---- latency budget ----------------------------------------------------------

struct LatencyBudget {
  double algorithmic_ms = 0.0;
  double compute_ms = 0.0;
  std::vector<std::pair<std::string, double>> stages;
  double total_ms = 0.0;
};

// External stages from the paper's deployment stack; the table is
// configuration, not simulation.
inline std::vector<std::pair<std::string, double>> default_stack_model() {
  return {{"phone", 10.0}, {"streamer", 10.0}, {"wireless", 20.0}};
}

inline LatencyBudget latency_report(const StftConfig& cfg, double compute_ms,
                                    const std::vector<std::pair<std::string, double>>& stack) {
  LatencyBudget budget;
  budget.algorithmic_ms = cfg.window_ms();
  budget.compute_ms = compute_ms;
  budget.stages = stack;
  budget.total_ms = budget.algorithmic_ms + budget.compute_ms;
  for (const auto& [name, ms] : stack) budget.total_ms += ms;
  return budget;
}

inline LatencyBudget latency_report(const StftConfig& cfg, const LatencyStats& bench,
                                    const std::vector<std::pair<std::string, double>>& stack) {
  return latency_report(cfg, bench.median_us / 1000.0, stack);
}

inline std::string format_latency_budget(const LatencyBudget& budget) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "latency budget\n";
  os << "  algorithmic " << std::setw(8) << budget.algorithmic_ms << " ms\n";
  os << "  compute     " << std::setw(8) << budget.compute_ms << " ms\n";
  for (const auto& [name, ms] : budget.stages) {
    os << "  " << name;
    for (std::size_t i = name.size(); i < 11; ++i) os << ' ';
    os << ' ' << std::setw(8) << ms << " ms\n";
  }
  os << "  total       " << std::setw(8) << budget.total_ms << " ms\n";
  return os.str();
}

inline void write_latency_budget_csv(const std::string& path, const LatencyBudget& budget) {
  CsvWriter csv(path);
  csv.row({"stage", "ms"});
  csv.row({"algorithmic", format_double(budget.algorithmic_ms)});
  csv.row({"compute", format_double(budget.compute_ms)});
  for (const auto& [name, ms] : budget.stages) csv.row({name, format_double(ms)});
  csv.row({"total", format_double(budget.total_ms)});
}

}  // namespace adnz

#endif  // ADNZ_RUNTIME_HPP_
