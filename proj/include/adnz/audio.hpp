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

// Mono audio container, RIFF/WAVE I/O (PCM16 read, float32 read/write),
// SNR-controlled scene mixing and the SI-SDR quality metric.

#ifndef ADNZ_AUDIO_HPP_
#define ADNZ_AUDIO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "adnz/common.hpp"

namespace adnz {

struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 22050;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

// A clean/noise scene at a known SNR. `mixed = clean + noise_gain * noise`.
struct Mixture {
  AudioBuffer mixed;
  AudioBuffer clean;
  double noise_gain = 0.0;
  double snr_db = 0.0;
};

inline double mean_square(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

namespace wav_detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(static_cast<std::uint32_t>(p[0]) |
                                    (static_cast<std::uint32_t>(p[1]) << 8));
}

inline void push_u32(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back(static_cast<unsigned char>(x & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 16) & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 24) & 0xff));
}

inline void push_u16(std::vector<unsigned char>& v, std::uint16_t x) {
  v.push_back(static_cast<unsigned char>(x & 0xff));
  v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
}

inline float bits_to_float(std::uint32_t bits) {
  float f;
  std::memcpy(&f, &bits, sizeof(f));
  return f;
}

inline std::uint32_t float_to_bits(float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof(bits));
  return bits;
}

}  // namespace wav_detail

// Reads a RIFF/WAVE file. PCM 16-bit and IEEE float 32-bit are accepted;
// multi-channel content is downmixed by channel averaging.
inline AudioBuffer read_wav(const std::string& path) {
  using namespace wav_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError(WavError::Kind::kMissingFile, "wav: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw WavError(WavError::Kind::kBadHeader, "wav: not a RIFF/WAVE file: " + path);
  }

  bool have_fmt = false;
  std::uint16_t format_tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
  const unsigned char* data_ptr = nullptr;
  std::size_t data_len = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t chunk_size = read_u32(bytes.data() + pos + 4);
    pos += 8;
    if (pos + chunk_size > bytes.size()) {
      throw WavError(WavError::Kind::kTruncatedChunk,
                     "wav: chunk '" + std::string(id, 4) + "' extends past end of file: " + path);
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_size < 16) {
        throw WavError(WavError::Kind::kTruncatedChunk, "wav: fmt chunk too short: " + path);
      }
      const unsigned char* f = bytes.data() + pos;
      format_tag = read_u16(f);
      channels = read_u16(f + 2);
      sample_rate = read_u32(f + 4);
      bits_per_sample = read_u16(f + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_ptr = bytes.data() + pos;
      data_len = chunk_size;
      have_data = true;
    }
    pos += chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || !have_data) {
    throw WavError(WavError::Kind::kBadHeader, "wav: missing fmt or data chunk: " + path);
  }
  if (channels == 0 || sample_rate == 0) {
    throw WavError(WavError::Kind::kBadHeader, "wav: zero channels or sample rate: " + path);
  }

  const bool pcm16 = (format_tag == 1 && bits_per_sample == 16);
  const bool float32 = (format_tag == 3 && bits_per_sample == 32);
  if (!pcm16 && !float32) {
    throw WavError(WavError::Kind::kUnsupportedCodec,
                   "wav: unsupported codec (format " + std::to_string(format_tag) + ", " +
                       std::to_string(bits_per_sample) + " bit): " + path);
  }

  const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  if (frame_bytes == 0 || data_len % frame_bytes != 0) {
    throw WavError(WavError::Kind::kTruncatedChunk, "wav: data chunk not frame-aligned: " + path);
  }
  const std::size_t n_frames = data_len / frame_bytes;

  AudioBuffer out;
  out.sample_rate = static_cast<int>(sample_rate);
  out.samples.resize(n_frames);
  const double inv_ch = 1.0 / static_cast<double>(channels);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* s = data_ptr + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        const std::int16_t v = static_cast<std::int16_t>(read_u16(s));
        acc += static_cast<double>(v) / 32768.0;
      } else {
        acc += static_cast<double>(bits_to_float(read_u32(s)));
      }
    }
    out.samples[i] = acc * inv_ch;
  }
  return out;
}

// Writes mono IEEE float-32 WAV; samples are stored bit-exactly after the
// double -> float narrowing.
inline void write_wav(const std::string& path, const AudioBuffer& buf) {
  using namespace wav_detail;
  for (double v : buf.samples) {
    require(std::isfinite(v), "write_wav: non-finite sample");
  }
  require_config(buf.sample_rate > 0, "write_wav: sample_rate must be positive");

  std::vector<unsigned char> bytes;
  bytes.reserve(44 + buf.samples.size() * 4);
  const std::uint32_t data_size = static_cast<std::uint32_t>(buf.samples.size() * 4);
  bytes.insert(bytes.end(), {'R', 'I', 'F', 'F'});
  push_u32(bytes, 4 + 24 + 8 + data_size);  // "WAVE" + fmt chunk + data header + data
  bytes.insert(bytes.end(), {'W', 'A', 'V', 'E'});
  bytes.insert(bytes.end(), {'f', 'm', 't', ' '});
  push_u32(bytes, 16);
  push_u16(bytes, 3);  // IEEE float
  push_u16(bytes, 1);  // mono
  push_u32(bytes, static_cast<std::uint32_t>(buf.sample_rate));
  push_u32(bytes, static_cast<std::uint32_t>(buf.sample_rate) * 4);
  push_u16(bytes, 4);
  push_u16(bytes, 32);
  bytes.insert(bytes.end(), {'d', 'a', 't', 'a'});
  push_u32(bytes, data_size);
  for (double v : buf.samples) {
    push_u32(bytes, float_to_bits(static_cast<float>(v)));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WavError(WavError::Kind::kUnwritable, "wav: cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WavError(WavError::Kind::kUnwritable, "wav: short write " + path);
}

// Scales a random-offset segment of `noise` so that
// 10*log10(P_clean / P_scaled_noise) == snr_db, then adds it to `clean`.
inline Mixture mix_at_snr(const AudioBuffer& clean, const AudioBuffer& noise, double snr_db,
                          Rng& rng) {
  require_config(clean.sample_rate == noise.sample_rate,
                 "mix_at_snr: sample rates differ (" + std::to_string(clean.sample_rate) + " vs " +
                     std::to_string(noise.sample_rate) + ")");
  require_config(noise.size() >= clean.size(), "mix_at_snr: noise shorter than clean");
  require_config(!clean.samples.empty(), "mix_at_snr: empty clean signal");

  const int max_offset = static_cast<int>(noise.size() - clean.size());
  const std::size_t offset = static_cast<std::size_t>(rng.uniform_int(0, max_offset));
  std::vector<double> segment(noise.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                              noise.samples.begin() +
                                  static_cast<std::ptrdiff_t>(offset + clean.size()));

  const double p_clean = mean_square(clean.samples);
  const double p_noise = mean_square(segment);
  if (p_clean <= 0.0) throw NumericError("mix_at_snr: clean signal has zero power");
  if (p_noise <= 0.0) throw NumericError("mix_at_snr: noise segment has zero power");

  const double gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));

  Mixture mix;
  mix.clean = clean;
  mix.noise_gain = gain;
  mix.snr_db = snr_db;
  mix.mixed.sample_rate = clean.sample_rate;
  mix.mixed.samples.resize(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    mix.mixed.samples[i] = clean.samples[i] + gain * segment[i];
  }
  return mix;
}

// Scale-invariant SDR in dB. The estimate is projected onto the reference;
// the result is the ratio of projected to residual power. Clamped to
// [-100, +100] so perfect (or degenerate) reconstructions stay finite.
inline double si_sdr(const AudioBuffer& reference, const AudioBuffer& estimate) {
  require_shape(reference.size() == estimate.size(),
                "si_sdr: length mismatch (" + std::to_string(reference.size()) + " vs " +
                    std::to_string(estimate.size()) + ")");
  const std::vector<double>& r = reference.samples;
  const std::vector<double>& e = estimate.samples;
  double rr = 0.0, re = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    rr += r[i] * r[i];
    re += r[i] * e[i];
  }
  if (rr <= 0.0) throw NumericError("si_sdr: reference has zero power");

  const double alpha = re / rr;
  const double target_power = alpha * alpha * rr;
  double residual_power = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = e[i] - alpha * r[i];
    residual_power += d * d;
  }
  if (residual_power <= 0.0) return 100.0;
  if (target_power <= 0.0) return -100.0;
  const double ratio_db = 10.0 * std::log10(target_power / residual_power);
  return std::clamp(ratio_db, -100.0, 100.0);
}

// Linear-interpolation resampling; adequate for moving material between
// nearby rates, nothing more.
inline AudioBuffer resample_linear(const AudioBuffer& buf, int target_rate) {
  require_config(target_rate > 0, "resample: target rate must be positive");
  if (buf.sample_rate == target_rate || buf.samples.empty()) {
    AudioBuffer out = buf;
    out.sample_rate = target_rate;
    return out;
  }
  const double ratio = static_cast<double>(buf.sample_rate) / target_rate;
  const std::size_t n_out = static_cast<std::size_t>(
      std::floor(static_cast<double>(buf.samples.size() - 1) / ratio)) + 1;
  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = i * ratio;
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, buf.samples.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    out.samples[i] = (1.0 - frac) * buf.samples[lo] + frac * buf.samples[hi];
  }
  return out;
}

// Measured SNR of an existing mixture; used by tests to close the loop.
inline double measured_snr_db(const Mixture& mix) {
  std::vector<double> noise_part(mix.mixed.size());
  for (std::size_t i = 0; i < noise_part.size(); ++i) {
    noise_part[i] = mix.mixed.samples[i] - mix.clean.samples[i];
  }
  const double p_clean = mean_square(mix.clean.samples);
  const double p_noise = mean_square(noise_part);
  if (p_noise <= 0.0 || p_clean <= 0.0) throw NumericError("measured_snr_db: zero power");
  return 10.0 * std::log10(p_clean / p_noise);
}

}  // namespace adnz

#endif  // ADNZ_AUDIO_HPP_
