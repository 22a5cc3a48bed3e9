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

// Per-frame execution-time measurement of the float32 streaming path.
// Measurements run serialized on a single thread, pinned to one CPU where the
// platform allows it.

#ifndef ADNZ_BENCH_HPP_
#define ADNZ_BENCH_HPP_

#include <algorithm>
#include <chrono>
#include <complex>
#include <functional>
#include <mutex>
#include <vector>

#ifdef __linux__
#include <pthread.h>
#include <sched.h>
#endif

#include "adnz/common.hpp"
#include "adnz/network.hpp"

namespace adnz {

struct LatencyStats {
  double median_us = 0.0;
  double p95_us = 0.0;
  int n_frames = 0;
};

struct LatencyMeasureConfig {
  int warmup_frames = 50;
  int measure_frames = 200;
};

using LatencyProvider = std::function<LatencyStats(const NetworkInstance&)>;

namespace bench_detail {

inline std::mutex& bench_mutex() {
  static std::mutex m;
  return m;
}

class ScopedCpuPin {
 public:
  ScopedCpuPin() {
#ifdef __linux__
    if (pthread_getaffinity_np(pthread_self(), sizeof(saved_), &saved_) != 0) return;
    const int cpu = sched_getcpu();
    if (cpu < 0) return;
    cpu_set_t one;
    CPU_ZERO(&one);
    CPU_SET(cpu, &one);
    pinned_ = pthread_setaffinity_np(pthread_self(), sizeof(one), &one) == 0;
#endif
  }
  ~ScopedCpuPin() {
#ifdef __linux__
    if (pinned_) pthread_setaffinity_np(pthread_self(), sizeof(saved_), &saved_);
#endif
  }

 private:
#ifdef __linux__
  cpu_set_t saved_{};
#endif
  bool pinned_ = false;
};

}  // namespace bench_detail

// Wall-clock per-frame stream_step timing on the float32 inference path.
// Warmup frames are discarded; median and p95 over the measured frames.
inline LatencyStats measure_latency(const NetworkInstance& net,
                                    const LatencyMeasureConfig& cfg = {}) {
  require_config(cfg.warmup_frames >= 50 && cfg.measure_frames >= 200,
                 "measure_latency: need >= 50 warmup and >= 200 measured frames");
  std::lock_guard<std::mutex> lock(bench_detail::bench_mutex());
  bench_detail::ScopedCpuPin pin;

  NetRunner<float> runner(net);
  const int n_bins = net.topo.in_bins + 1;
  Rng rng(0x6e6f697365ULL);
  std::vector<std::vector<std::complex<double>>> frames(8);
  for (auto& f : frames) {
    f.resize(static_cast<std::size_t>(n_bins));
    for (auto& v : f) v = {0.05 * rng.gaussian(), 0.05 * rng.gaussian()};
  }

  using clock = std::chrono::steady_clock;
  std::vector<double> samples_us;
  samples_us.reserve(static_cast<std::size_t>(cfg.measure_frames));
  for (int i = 0; i < cfg.warmup_frames + cfg.measure_frames; ++i) {
    const auto& frame = frames[static_cast<std::size_t>(i) % frames.size()];
    const auto t0 = clock::now();
    volatile double sink =
        runner.step(frame.data(), n_bins).m[0].real();  // keep the call alive
    (void)sink;
    const auto t1 = clock::now();
    if (i >= cfg.warmup_frames) {
      samples_us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
  }

  std::sort(samples_us.begin(), samples_us.end());
  LatencyStats stats;
  stats.n_frames = static_cast<int>(samples_us.size());
  const std::size_t n = samples_us.size();
  stats.median_us = n % 2 == 1 ? samples_us[n / 2]
                               : 0.5 * (samples_us[n / 2 - 1] + samples_us[n / 2]);
  stats.p95_us = samples_us[std::min(n - 1, static_cast<std::size_t>(0.95 * n))];
  return stats;
}

}  // namespace adnz

#endif  // ADNZ_BENCH_HPP_
