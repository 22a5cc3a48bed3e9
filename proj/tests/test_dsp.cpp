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

#include "adnz/dsp.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"

using namespace adnz;

namespace {

AudioBuffer white_noise(int n, int sr, std::uint64_t seed) {
  Rng rng(seed);
  AudioBuffer buf;
  buf.sample_rate = sr;
  buf.samples.resize(static_cast<std::size_t>(n));
  for (auto& v : buf.samples) v = rng.uniform(-0.8, 0.8);
  return buf;
}

// Error-to-signal power ratio in dB over the interior (half a window trimmed
// at each edge).
double interior_error_db(const AudioBuffer& x, const AudioBuffer& y, int window_len) {
  const std::size_t lo = static_cast<std::size_t>(window_len / 2);
  const std::size_t hi = std::min(x.size(), y.size()) - lo;
  double err = 0.0, sig = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double d = x.samples[i] - y.samples[i];
    err += d * d;
    sig += x.samples[i] * x.samples[i];
  }
  REQUIRE(sig > 0.0);
  return 10.0 * std::log10(err / sig);
}

}  // namespace

TEST_SUITE("dsp") {

TEST_CASE("default config approximates the 25 ms / 6 ms framing") {
  StftConfig cfg;
  validate(cfg);
  CHECK(cfg.window_ms() == doctest::Approx(24.9433).epsilon(1e-4));
  CHECK(cfg.hop_ms() == doctest::Approx(5.9864).epsilon(1e-4));
  CHECK(cfg.n_bins() == 513);
}

TEST_CASE("config invariants are enforced") {
  StftConfig cfg;
  cfg.hop = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = StftConfig{};
  cfg.hop = cfg.window_len + 1;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = StftConfig{};
  cfg.fft_size = 1000;  // not a power of two
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = StftConfig{};
  cfg.window_len = 2048;  // window > fft
  CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("window-sum envelope stays bounded away from zero at <= half-window hops") {
  CHECK(min_wola_envelope(StftConfig{}) > 1e-3);
  StftConfig half;
  half.window_len = 512;
  half.hop = 256;
  half.fft_size = 1024;
  CHECK(min_wola_envelope(half) > 1e-3);
}

TEST_CASE("all-zero input gives an all-zero spectrogram") {
  AudioBuffer buf;
  buf.samples.assign(4096, 0.0);
  const Spectrogram spec = stft(buf, StftConfig{});
  for (const auto& v : spec.data) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("too-short input is rejected") {
  AudioBuffer buf;
  buf.samples.assign(100, 0.1);
  CHECK_THROWS(stft(buf, StftConfig{}));
}

TEST_CASE("frame t covers samples [t*hop, t*hop + window)") {
  StftConfig cfg;
  AudioBuffer buf;
  buf.samples.assign(static_cast<std::size_t>(cfg.window_len + 5 * cfg.hop), 0.0);
  const int impulse_pos = cfg.window_len + 2 * cfg.hop + 7;
  buf.samples[static_cast<std::size_t>(impulse_pos)] = 1.0;
  const Spectrogram spec = stft(buf, cfg);
  for (int t = 0; t < spec.n_frames(); ++t) {
    double energy = 0.0;
    for (int b = 0; b < spec.n_bins; ++b) energy += std::norm(spec.frame(t)[b]);
    const bool covers =
        t * cfg.hop <= impulse_pos && impulse_pos < t * cfg.hop + cfg.window_len;
    if (covers) {
      CHECK(energy > 0.0);
    } else {
      CHECK(energy == 0.0);
    }
  }
}

// Closed-form oracle: with window_len == fft_size, a periodic-Hann windowed
// cosine at exactly bin k has spectral support {k-1, k, k+1} only.
TEST_CASE("bin-centered sinusoid concentrates within +-1 bin") {
  StftConfig cfg;
  cfg.window_len = 1024;
  cfg.hop = 256;
  cfg.fft_size = 1024;
  for (int k : {37, 100, 301}) {
    AudioBuffer buf;
    buf.sample_rate = cfg.sample_rate;
    const double freq = static_cast<double>(k) * cfg.sample_rate / cfg.fft_size;
    buf.samples.resize(static_cast<std::size_t>(cfg.window_len + 8 * cfg.hop));
    for (std::size_t i = 0; i < buf.samples.size(); ++i) {
      buf.samples[i] = 0.7 * std::cos(2.0 * kPi * freq * static_cast<double>(i) /
                                          cfg.sample_rate +
                                      0.3);
    }
    const Spectrogram spec = stft(buf, cfg);
    for (int t = 1; t + 1 < spec.n_frames(); ++t) {
      double total = 0.0, near = 0.0;
      for (int b = 0; b < spec.n_bins; ++b) {
        const double e = std::norm(spec.frame(t)[b]);
        total += e;
        if (std::abs(b - k) <= 1) near += e;
      }
      CHECK(near / total >= 0.99);
    }
  }
}

TEST_CASE("Parseval-style frame energy identity") {
  StftConfig cfg;
  AudioBuffer buf = white_noise(cfg.window_len + 4 * cfg.hop, cfg.sample_rate, 17);
  const Spectrogram spec = stft(buf, cfg);
  const std::vector<double> window = hann_window(cfg.window_len);
  for (int t = 0; t < spec.n_frames(); ++t) {
    double spectral = 0.0;
    for (int b = 0; b < spec.n_bins; ++b) {
      const double weight = (b == 0 || b == spec.n_bins - 1) ? 1.0 : 2.0;
      spectral += weight * std::norm(spec.frame(t)[b]);
    }
    spectral /= cfg.fft_size;
    double windowed = 0.0;
    for (int n = 0; n < cfg.window_len; ++n) {
      const double v =
          buf.samples[static_cast<std::size_t>(t * cfg.hop + n)] * window[static_cast<std::size_t>(n)];
      windowed += v * v;
    }
    CHECK(spectral == doctest::Approx(windowed).epsilon(1e-6));
  }
}

TEST_CASE("istft(stft(x)) reconstructs within -60 dB on varied signals") {
  StftConfig cfg;
  const int n = 3 * cfg.sample_rate;

  SUBCASE("white noise") {
    AudioBuffer x = white_noise(n, cfg.sample_rate, 5);
    CHECK(interior_error_db(x, istft(stft(x, cfg)), cfg.window_len) <= -60.0);
  }
  SUBCASE("speech-like AM tone") {
    AudioBuffer x;
    x.sample_rate = cfg.sample_rate;
    x.samples.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / cfg.sample_rate;
      x.samples[static_cast<std::size_t>(i)] =
          (0.55 + 0.45 * std::sin(2.0 * kPi * 3.1 * t)) * std::sin(2.0 * kPi * 443.0 * t);
    }
    CHECK(interior_error_db(x, istft(stft(x, cfg)), cfg.window_len) <= -60.0);
  }
  SUBCASE("impulses over a noise floor") {
    AudioBuffer x = white_noise(n, cfg.sample_rate, 9);
    for (double& v : x.samples) v *= 0.01;
    for (int i = cfg.window_len; i < n; i += 4096) x.samples[static_cast<std::size_t>(i)] = 1.0;
    CHECK(interior_error_db(x, istft(stft(x, cfg)), cfg.window_len) <= -60.0);
  }
}

TEST_CASE("all-zero spectrogram synthesizes silence") {
  StftConfig cfg;
  AudioBuffer buf;
  buf.samples.assign(8192, 0.0);
  Spectrogram spec = stft(buf, cfg);
  const AudioBuffer out = istft(spec);
  for (double v : out.samples) CHECK(v == 0.0);
}

TEST_CASE("istft is linear") {
  StftConfig cfg;
  AudioBuffer a = white_noise(8192, cfg.sample_rate, 21);
  AudioBuffer b = white_noise(8192, cfg.sample_rate, 22);
  Spectrogram sa = stft(a, cfg);
  Spectrogram sb = stft(b, cfg);
  Spectrogram sum = sa;
  for (std::size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += sb.data[i];
  const AudioBuffer ya = istft(sa);
  const AudioBuffer yb = istft(sb);
  const AudioBuffer ysum = istft(sum);
  for (std::size_t i = 0; i < ysum.size(); ++i) {
    CHECK(ysum.samples[i] == doctest::Approx(ya.samples[i] + yb.samples[i]).epsilon(1e-9));
  }
}

TEST_CASE("istft rejects mismatched bin counts") {
  StftConfig cfg;
  AudioBuffer buf = white_noise(4096, cfg.sample_rate, 2);
  Spectrogram spec = stft(buf, cfg);
  spec.n_bins -= 1;  // corrupt
  CHECK_THROWS_AS(istft(spec), ShapeError);
}

}  // TEST_SUITE
