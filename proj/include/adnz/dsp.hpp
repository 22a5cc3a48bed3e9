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

// Short-time Fourier analysis and weighted overlap-add synthesis.
// Defaults approximate a 25 ms Hann window with 6 ms hop at 22050 Hz:
// 550 / 132 samples, zero-padded to a 1024-point FFT.

#ifndef ADNZ_DSP_HPP_
#define ADNZ_DSP_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "adnz/audio.hpp"
#include "adnz/common.hpp"

namespace adnz {

inline constexpr double kPi = 3.14159265358979323846;
// Floor for the summed squared-window synthesis envelope. Positions where
// the envelope falls below this (the outermost few samples of a stream,
// where the Hann window itself is nearly zero) are attenuated instead of
// boosted; everywhere else the division is exact. A much smaller floor turns
// those edge samples into large spikes whenever frames have been modified,
// because masked frames are no longer exactly window-shaped.
inline constexpr double kWolaEnvelopeFloor = 1e-3;

struct StftConfig {
  int sample_rate = 22050;
  int window_len = 550;
  int hop = 132;
  int fft_size = 1024;

  int n_bins() const { return fft_size / 2 + 1; }
  double window_ms() const { return 1000.0 * window_len / sample_rate; }
  double hop_ms() const { return 1000.0 * hop / sample_rate; }
};

// Periodic (DFT-even) Hann window.
inline std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) {
    w[static_cast<std::size_t>(n)] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / length);
  }
  return w;
}

// Minimum of the summed squared-window envelope over one hop period in the
// fully-overlapped interior.
inline double min_wola_envelope(const StftConfig& cfg) {
  const std::vector<double> w = hann_window(cfg.window_len);
  double min_env = 1e30;
  for (int n = 0; n < cfg.hop; ++n) {
    double env = 0.0;
    for (int m = n; m < cfg.window_len; m += cfg.hop) {
      env += w[static_cast<std::size_t>(m)] * w[static_cast<std::size_t>(m)];
    }
    min_env = std::min(min_env, env);
  }
  return min_env;
}

inline void validate(const StftConfig& cfg) {
  require_config(cfg.sample_rate > 0, "stft: sample_rate must be positive");
  require_config(cfg.hop > 0 && cfg.hop <= cfg.window_len && cfg.window_len <= cfg.fft_size,
                 "stft: need 0 < hop <= window_len <= fft_size");
  require_config(cfg.fft_size > 0 && (cfg.fft_size & (cfg.fft_size - 1)) == 0,
                 "stft: fft_size must be a power of two");
  if (cfg.hop * 2 <= cfg.window_len) {
    require_config(min_wola_envelope(cfg) > 1e-3,
                   "stft: window-sum envelope degenerates at this hop/window combination");
  }
}

// Iterative radix-2 complex FFT with a precomputed plan.
class Fft {
 public:
  explicit Fft(int n) : n_(n) {
    require_config(n > 0 && (n & (n - 1)) == 0, "fft: size must be a power of two");
    bitrev_.resize(static_cast<std::size_t>(n));
    int log2n = 0;
    while ((1 << log2n) < n) ++log2n;
    for (int i = 0; i < n; ++i) {
      int r = 0;
      for (int b = 0; b < log2n; ++b) {
        if (i & (1 << b)) r |= 1 << (log2n - 1 - b);
      }
      bitrev_[static_cast<std::size_t>(i)] = r;
    }
    twiddles_.resize(static_cast<std::size_t>(n / 2));
    for (int k = 0; k < n / 2; ++k) {
      const double ang = -2.0 * kPi * k / n;
      twiddles_[static_cast<std::size_t>(k)] = {std::cos(ang), std::sin(ang)};
    }
  }

  int size() const { return n_; }

  // In-place DFT, e^{-i 2 pi k n / N} convention, no scaling.
  void forward(std::vector<std::complex<double>>& x) const { transform(x, false); }

  // In-place inverse DFT with 1/N scaling.
  void inverse(std::vector<std::complex<double>>& x) const {
    transform(x, true);
    const double scale = 1.0 / n_;
    for (auto& v : x) v *= scale;
  }

 private:
  void transform(std::vector<std::complex<double>>& x, bool invert) const {
    require_shape(static_cast<int>(x.size()) == n_,
                  "fft: buffer size " + std::to_string(x.size()) + " != plan size " +
                      std::to_string(n_));
    for (int i = 0; i < n_; ++i) {
      const int j = bitrev_[static_cast<std::size_t>(i)];
      if (i < j) std::swap(x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)]);
    }
    for (int len = 2; len <= n_; len <<= 1) {
      const int half = len / 2;
      const int stride = n_ / len;
      for (int start = 0; start < n_; start += len) {
        for (int k = 0; k < half; ++k) {
          std::complex<double> w = twiddles_[static_cast<std::size_t>(k * stride)];
          if (invert) w = std::conj(w);
          auto& a = x[static_cast<std::size_t>(start + k)];
          auto& b = x[static_cast<std::size_t>(start + k + half)];
          const std::complex<double> t = b * w;
          b = a - t;
          a += t;
        }
      }
    }
  }

  int n_;
  std::vector<int> bitrev_;
  std::vector<std::complex<double>> twiddles_;
};

// Complex one-sided time-frequency frames, row-major [frame][bin].
struct Spectrogram {
  StftConfig config;
  int n_bins = 0;
  std::vector<std::complex<double>> data;

  int n_frames() const {
    return n_bins == 0 ? 0 : static_cast<int>(data.size()) / n_bins;
  }
  std::complex<double>* frame(int t) {
    return data.data() + static_cast<std::ptrdiff_t>(t) * n_bins;
  }
  const std::complex<double>* frame(int t) const {
    return data.data() + static_cast<std::ptrdiff_t>(t) * n_bins;
  }
};

// Frame t covers samples [t*hop, t*hop + window_len). The windowed segment is
// zero-padded to fft_size and transformed; one-sided bins are kept.
inline Spectrogram stft(const AudioBuffer& buf, const StftConfig& cfg) {
  validate(cfg);
  require_config(buf.sample_rate == cfg.sample_rate,
                 "stft: buffer sample rate " + std::to_string(buf.sample_rate) +
                     " != config rate " + std::to_string(cfg.sample_rate));
  require(static_cast<int>(buf.size()) >= cfg.window_len,
          "stft: input shorter than one window");

  const std::vector<double> window = hann_window(cfg.window_len);
  const int n_frames = (static_cast<int>(buf.size()) - cfg.window_len) / cfg.hop + 1;
  const int n_bins = cfg.n_bins();

  Spectrogram spec;
  spec.config = cfg;
  spec.n_bins = n_bins;
  spec.data.resize(static_cast<std::size_t>(n_frames) * static_cast<std::size_t>(n_bins));

  Fft fft(cfg.fft_size);
  std::vector<std::complex<double>> scratch(static_cast<std::size_t>(cfg.fft_size));
  for (int t = 0; t < n_frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * static_cast<std::size_t>(cfg.hop);
    for (int n = 0; n < cfg.window_len; ++n) {
      scratch[static_cast<std::size_t>(n)] = {
          buf.samples[start + static_cast<std::size_t>(n)] * window[static_cast<std::size_t>(n)],
          0.0};
    }
    std::fill(scratch.begin() + cfg.window_len, scratch.end(), std::complex<double>(0.0, 0.0));
    fft.forward(scratch);
    std::copy(scratch.begin(), scratch.begin() + n_bins, spec.frame(t));
  }
  return spec;
}

// Weighted overlap-add synthesis with synthesis window == analysis window,
// normalized per sample by the summed squared-window envelope (floored).
inline AudioBuffer istft(const Spectrogram& spec) {
  const StftConfig& cfg = spec.config;
  validate(cfg);
  require_shape(spec.n_bins == cfg.n_bins(),
                "istft: bin count " + std::to_string(spec.n_bins) + " != config bins " +
                    std::to_string(cfg.n_bins()));
  const int n_frames = spec.n_frames();
  const std::vector<double> window = hann_window(cfg.window_len);

  AudioBuffer out;
  out.sample_rate = cfg.sample_rate;
  if (n_frames == 0) return out;

  const std::size_t out_len =
      static_cast<std::size_t>(n_frames - 1) * static_cast<std::size_t>(cfg.hop) +
      static_cast<std::size_t>(cfg.window_len);
  std::vector<double> num(out_len, 0.0);
  std::vector<double> den(out_len, 0.0);

  Fft fft(cfg.fft_size);
  std::vector<std::complex<double>> scratch(static_cast<std::size_t>(cfg.fft_size));
  const int n_bins = spec.n_bins;
  for (int t = 0; t < n_frames; ++t) {
    const std::complex<double>* bins = spec.frame(t);
    // Rebuild the full spectrum by conjugate symmetry.
    for (int k = 0; k < n_bins; ++k) scratch[static_cast<std::size_t>(k)] = bins[k];
    for (int k = n_bins; k < cfg.fft_size; ++k) {
      scratch[static_cast<std::size_t>(k)] = std::conj(bins[cfg.fft_size - k]);
    }
    fft.inverse(scratch);
    const std::size_t start = static_cast<std::size_t>(t) * static_cast<std::size_t>(cfg.hop);
    for (int n = 0; n < cfg.window_len; ++n) {
      const double w = window[static_cast<std::size_t>(n)];
      num[start + static_cast<std::size_t>(n)] += w * scratch[static_cast<std::size_t>(n)].real();
      den[start + static_cast<std::size_t>(n)] += w * w;
    }
  }

  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    out.samples[i] = num[i] / std::max(den[i], kWolaEnvelopeFloor);
  }
  return out;
}

}  // namespace adnz

#endif  // ADNZ_DSP_HPP_
