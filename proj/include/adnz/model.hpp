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

// Searchable U-Net genome, its instantiation as a causal frame-wise network,
// complex ratio mask ground truth, MAC accounting and model serialization.
//
// Topology sketch (all convolutions run along the frequency axis; time
// context enters only through the recurrent bottleneck, so the network is
// strictly causal):
//
//   features [2, bins] -> enc conv levels (stride 1|2) -> bottleneck
//   (GRU | LSTM | conv pair) -> mirrored transposed-conv decoder with
//   optional skip concats -> 1x1 head -> K*tanh -> mask [2, bins]

#ifndef ADNZ_MODEL_HPP_
#define ADNZ_MODEL_HPP_

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "adnz/common.hpp"
#include "adnz/dsp.hpp"
#include "adnz/tensor.hpp"

namespace adnz {

// cIRM compression constants (mask components live in (-K, K)).
inline constexpr double kCirmK = 10.0;
inline constexpr double kCirmC = 0.1;
// |Y|^2 floor for the complex division.
inline constexpr double kMaskPowerFloor = 1e-8;
// Bins presented to the network; the Nyquist bin is passed through.
inline constexpr int kNetworkBins = 512;

enum class BottleneckKind { kGru, kLstm, kConv };
enum class Activation { kRelu, kTanh };

inline std::string to_string(BottleneckKind k) {
  switch (k) {
    case BottleneckKind::kGru: return "gru";
    case BottleneckKind::kLstm: return "lstm";
    case BottleneckKind::kConv: return "conv";
  }
  return "?";
}

inline std::string to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

inline BottleneckKind bottleneck_from_string(const std::string& s) {
  if (s == "gru") return BottleneckKind::kGru;
  if (s == "lstm") return BottleneckKind::kLstm;
  if (s == "conv") return BottleneckKind::kConv;
  throw ConfigError("unknown bottleneck kind: " + s);
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation: " + s);
}

struct GenomeLevel {
  int channels = 8;
  int kernel = 3;
  int stride = 1;
  bool skip = true;
};

// Searchable architecture description.
struct Genome {
  std::vector<GenomeLevel> levels;
  BottleneckKind bottleneck = BottleneckKind::kGru;
  int hidden = 32;
  Activation activation = Activation::kRelu;
};

inline void validate(const Genome& g, int bins = kNetworkBins) {
  require_config(!g.levels.empty() && g.levels.size() <= 4,
                 "genome: level count must be 1..4, got " + std::to_string(g.levels.size()));
  int width = bins;
  for (const GenomeLevel& lv : g.levels) {
    require_config(lv.channels >= 4 && lv.channels <= 64,
                   "genome: channels out of 4..64: " + std::to_string(lv.channels));
    require_config(lv.kernel == 3 || lv.kernel == 5,
                   "genome: kernel must be 3 or 5: " + std::to_string(lv.kernel));
    require_config(lv.stride == 1 || lv.stride == 2,
                   "genome: stride must be 1 or 2: " + std::to_string(lv.stride));
    require_shape(width % lv.stride == 0, "genome: stride " + std::to_string(lv.stride) +
                                              " does not divide bin count " +
                                              std::to_string(width));
    width /= lv.stride;
  }
  require_config(g.hidden >= 8 && g.hidden <= 128,
                 "genome: hidden size out of 8..128: " + std::to_string(g.hidden));
}

inline std::string genome_to_text(const Genome& g) {
  std::ostringstream os;
  os << "genome {\n";
  os << "  levels " << g.levels.size() << "\n";
  for (const GenomeLevel& lv : g.levels) {
    os << "  level channels=" << lv.channels << " kernel=" << lv.kernel
       << " stride=" << lv.stride << " skip=" << (lv.skip ? 1 : 0) << "\n";
  }
  os << "  bottleneck " << to_string(g.bottleneck) << " hidden=" << g.hidden << "\n";
  os << "  activation " << to_string(g.activation) << "\n";
  os << "}\n";
  return os.str();
}

inline std::string genome_fingerprint(const Genome& g) {
  return to_hex(fnv1a64(genome_to_text(g)));
}

// Concrete layer shapes. Channel counts live here (not in Genome) so that
// pruning can shrink them below the search-space bounds.
struct NetworkTopology {
  int in_bins = kNetworkBins;
  Activation activation = Activation::kRelu;
  BottleneckKind bottleneck = BottleneckKind::kGru;
  int hidden = 32;
  struct Level {
    int c_out = 8;
    int kernel = 3;
    int stride = 1;
    bool skip = true;
  };
  std::vector<Level> enc;
  std::vector<int> dec_channels;  // output channels per decoder level

  int n_levels() const { return static_cast<int>(enc.size()); }

  // Frequency width entering encoder level i (i == n_levels() gives the
  // bottleneck width).
  int width_at(int i) const {
    int w = in_bins;
    for (int l = 0; l < i; ++l) w /= enc[static_cast<std::size_t>(l)].stride;
    return w;
  }

  int enc_in_channels(int i) const {
    return i == 0 ? 2 : enc[static_cast<std::size_t>(i - 1)].c_out;
  }

  // Channels entering decoder level i's transposed conv (skip concat
  // included).
  int dec_in_channels(int i) const {
    const int upstream = (i == n_levels() - 1) ? enc.back().c_out
                                               : dec_channels[static_cast<std::size_t>(i + 1)];
    return upstream + (enc[static_cast<std::size_t>(i)].skip
                           ? enc[static_cast<std::size_t>(i)].c_out
                           : 0);
  }

  int bottleneck_io() const { return enc.back().c_out * width_at(n_levels()); }
};

inline void validate(const NetworkTopology& t) {
  require_config(!t.enc.empty() && t.dec_channels.size() == t.enc.size(),
                 "topology: encoder/decoder level mismatch");
  require_config(t.hidden >= 1, "topology: hidden must be >= 1");
  int width = t.in_bins;
  for (const auto& lv : t.enc) {
    require_config(lv.c_out >= 1, "topology: channel count must be >= 1");
    require_shape(width % lv.stride == 0, "topology: stride " + std::to_string(lv.stride) +
                                              " does not divide bin count " +
                                              std::to_string(width));
    width /= lv.stride;
  }
  for (int c : t.dec_channels) require_config(c >= 1, "topology: decoder channels must be >= 1");
}

inline NetworkTopology topology_from_genome(const Genome& g, int bins = kNetworkBins) {
  validate(g, bins);
  NetworkTopology t;
  t.in_bins = bins;
  t.activation = g.activation;
  t.bottleneck = g.bottleneck;
  t.hidden = g.hidden;
  for (const GenomeLevel& lv : g.levels) {
    t.enc.push_back({lv.channels, lv.kernel, lv.stride, lv.skip});
  }
  // Decoder mirrors the encoder: level i emits what encoder level i consumed,
  // except the outermost level, which keeps enc[0]'s width for the head.
  t.dec_channels.resize(g.levels.size());
  for (std::size_t i = 0; i < g.levels.size(); ++i) {
    t.dec_channels[i] = i == 0 ? g.levels[0].channels : g.levels[i - 1].channels;
  }
  validate(t);
  return t;
}

// ---- weight plan -----------------------------------------------------------

struct WeightSpec {
  std::string name;
  std::vector<std::size_t> shape;
};

inline std::vector<WeightSpec> layer_plan(const NetworkTopology& t) {
  std::vector<WeightSpec> plan;
  const auto u = [](int v) { return static_cast<std::size_t>(v); };
  for (int i = 0; i < t.n_levels(); ++i) {
    const auto& lv = t.enc[u(i)];
    plan.push_back({"enc" + std::to_string(i) + ".w",
                    {u(lv.c_out), u(t.enc_in_channels(i)), u(lv.kernel)}});
    plan.push_back({"enc" + std::to_string(i) + ".b", {u(lv.c_out)}});
  }
  const int c_last = t.enc.back().c_out;
  if (t.bottleneck == BottleneckKind::kConv) {
    plan.push_back({"bn.conv1.w", {u(t.hidden), u(c_last), 3}});
    plan.push_back({"bn.conv1.b", {u(t.hidden)}});
    plan.push_back({"bn.conv2.w", {u(c_last), u(t.hidden), 3}});
    plan.push_back({"bn.conv2.b", {u(c_last)}});
  } else {
    const std::size_t io = u(t.bottleneck_io());
    const std::size_t h = u(t.hidden);
    const std::vector<std::string> gates =
        t.bottleneck == BottleneckKind::kGru ? std::vector<std::string>{"z", "r", "n"}
                                             : std::vector<std::string>{"i", "f", "g", "o"};
    for (const std::string& gate : gates) {
      plan.push_back({"bn.w" + gate, {h, io}});
      plan.push_back({"bn.u" + gate, {h, h}});
      plan.push_back({"bn.b" + gate, {h}});
    }
    plan.push_back({"bn.proj.w", {io, h}});
    plan.push_back({"bn.proj.b", {io}});
  }
  for (int i = t.n_levels() - 1; i >= 0; --i) {
    const auto& lv = t.enc[u(i)];
    plan.push_back({"dec" + std::to_string(i) + ".w",
                    {u(t.dec_in_channels(i)), u(t.dec_channels[u(i)]), u(lv.kernel)}});
    plan.push_back({"dec" + std::to_string(i) + ".b", {u(t.dec_channels[u(i)])}});
  }
  plan.push_back({"head.w", {2, u(t.dec_channels[0]), 1}});
  plan.push_back({"head.b", {2}});
  return plan;
}

// Instantiated network: topology plus weight tensors ordered by layer_plan.
struct NetworkInstance {
  NetworkTopology topo;
  std::vector<Tensor<double>> weights;

  int weight_index(const std::string& name) const {
    const auto plan = layer_plan(topo);
    for (std::size_t i = 0; i < plan.size(); ++i) {
      if (plan[i].name == name) return static_cast<int>(i);
    }
    throw Error("no such weight: " + name);
  }

  Tensor<double>& weight(const std::string& name) {
    return weights[static_cast<std::size_t>(weight_index(name))];
  }
  const Tensor<double>& weight(const std::string& name) const {
    return weights[static_cast<std::size_t>(weight_index(name))];
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += w.numel();
    return n;
  }
};

// Fan-in per weight tensor, for uniform init scaling.
inline std::size_t fan_in_of(const WeightSpec& spec) {
  if (spec.shape.size() == 3) {
    // conv [Cout,Cin,K] or tconv [Cin,Cout,K]: both use Cin*K worth of taps;
    // for tconv the first dim is the input.
    if (spec.name.rfind("dec", 0) == 0) return spec.shape[0] * spec.shape[2];
    return spec.shape[1] * spec.shape[2];
  }
  if (spec.shape.size() == 2) return spec.shape[1];
  return 0;  // bias
}

// Freshly built networks predict near-zero masks: the head starts at a small
// scale so an untrained model is close to a no-op rather than a random
// spectral gate.
inline constexpr double kHeadInitScale = 0.01;

// Builds a network with uniform fan-in-scaled weights and zero biases.
inline NetworkInstance build_network(const Genome& g, Rng& rng, int bins = kNetworkBins) {
  NetworkInstance net;
  net.topo = topology_from_genome(g, bins);
  const auto plan = layer_plan(net.topo);
  net.weights.reserve(plan.size());
  for (const WeightSpec& spec : plan) {
    Tensor<double> w(spec.shape);
    const std::size_t fan_in = fan_in_of(spec);
    if (fan_in > 0) {
      double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      if (spec.name.rfind("head", 0) == 0) bound *= kHeadInitScale;
      for (auto& v : w.data) v = rng.uniform(-bound, bound);
    }
    net.weights.push_back(std::move(w));
  }
  return net;
}

// ---- complex ratio mask ----------------------------------------------------

// One frame of compressed mask values; components are bounded by kCirmK.
struct MaskFrame {
  std::vector<std::complex<double>> m;
};

// c(m) = K * (1 - exp(-C m)) / (1 + exp(-C m)), evaluated as K*tanh(C m / 2)
// for numerical stability at large |m|.
inline double cirm_compress(double m) { return kCirmK * std::tanh(0.5 * kCirmC * m); }

// Inverse: m = -(1/C) * ln((K - c) / (K + c)); values at the bound are
// clamped to K - 1e-6 first.
inline double cirm_uncompress(double c) {
  const double bound = kCirmK - 1e-6;
  const double cc = std::max(-bound, std::min(bound, c));
  return -(1.0 / kCirmC) * std::log((kCirmK - cc) / (kCirmK + cc));
}

// Ground-truth compressed cIRM: M = S / Y with |Y|^2 floored, then
// compressed per real/imag coordinate.
inline std::vector<MaskFrame> compute_cirm(const Spectrogram& clean, const Spectrogram& noisy) {
  require_shape(clean.n_bins == noisy.n_bins && clean.n_frames() == noisy.n_frames(),
                "compute_cirm: spectrogram shapes differ (" + std::to_string(clean.n_frames()) +
                    "x" + std::to_string(clean.n_bins) + " vs " +
                    std::to_string(noisy.n_frames()) + "x" + std::to_string(noisy.n_bins) + ")");
  std::vector<MaskFrame> masks(static_cast<std::size_t>(clean.n_frames()));
  for (int t = 0; t < clean.n_frames(); ++t) {
    const std::complex<double>* s = clean.frame(t);
    const std::complex<double>* y = noisy.frame(t);
    MaskFrame& frame = masks[static_cast<std::size_t>(t)];
    frame.m.resize(static_cast<std::size_t>(clean.n_bins));
    for (int b = 0; b < clean.n_bins; ++b) {
      const double denom = std::max(std::norm(y[b]), kMaskPowerFloor);
      const std::complex<double> raw = s[b] * std::conj(y[b]) / denom;
      frame.m[static_cast<std::size_t>(b)] = {cirm_compress(raw.real()),
                                              cirm_compress(raw.imag())};
    }
  }
  return masks;
}

// Uncompresses the mask and applies it to a noisy frame by complex multiply.
inline std::vector<std::complex<double>> apply_mask(
    const std::complex<double>* noisy_frame, int n_bins, const MaskFrame& mask) {
  require_shape(static_cast<int>(mask.m.size()) == n_bins,
                "apply_mask: mask has " + std::to_string(mask.m.size()) + " bins, frame has " +
                    std::to_string(n_bins));
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    const std::complex<double>& c = mask.m[static_cast<std::size_t>(b)];
    const std::complex<double> m(cirm_uncompress(c.real()), cirm_uncompress(c.imag()));
    out[static_cast<std::size_t>(b)] = m * noisy_frame[b];
  }
  return out;
}

// ---- MAC accounting --------------------------------------------------------

// conv: out_positions * C_out * C_in * K; transposed conv: in_positions *
// C_in * C_out * K; linear: in * out; GRU: 3h(h+i); LSTM: 4h(h+i).
inline long long macs_conv(long long positions, long long c_out, long long c_in, long long k) {
  return positions * c_out * c_in * k;
}
inline long long macs_linear(long long in, long long out) { return in * out; }
inline long long macs_gru(long long hidden, long long in) {
  return 3 * hidden * (hidden + in);
}
inline long long macs_lstm(long long hidden, long long in) {
  return 4 * hidden * (hidden + in);
}

inline long long count_macs(const NetworkTopology& t) {
  long long macs = 0;
  for (int i = 0; i < t.n_levels(); ++i) {
    const auto& lv = t.enc[static_cast<std::size_t>(i)];
    macs += macs_conv(t.width_at(i + 1), lv.c_out, t.enc_in_channels(i), lv.kernel);
  }
  const long long w_last = t.width_at(t.n_levels());
  const long long c_last = t.enc.back().c_out;
  if (t.bottleneck == BottleneckKind::kConv) {
    macs += macs_conv(w_last, t.hidden, c_last, 3);
    macs += macs_conv(w_last, c_last, t.hidden, 3);
  } else {
    const long long io = t.bottleneck_io();
    macs += t.bottleneck == BottleneckKind::kGru ? macs_gru(t.hidden, io)
                                                 : macs_lstm(t.hidden, io);
    macs += macs_linear(t.hidden, io);  // projection back to [C, W]
  }
  for (int i = t.n_levels() - 1; i >= 0; --i) {
    const auto& lv = t.enc[static_cast<std::size_t>(i)];
    macs += macs_conv(t.width_at(i + 1), t.dec_channels[static_cast<std::size_t>(i)],
                      t.dec_in_channels(i), lv.kernel);
  }
  macs += macs_conv(t.in_bins, 2, t.dec_channels[0], 1);  // 1x1 head
  return macs;
}

inline long long count_macs(const NetworkInstance& net) { return count_macs(net.topo); }

// ---- serialization ---------------------------------------------------------
//
// "ADNZ" magic, format version byte, topology description, then weight
// tensors as little-endian float-32 with shape headers. The file round-trips
// bit-exactly.

namespace model_io {

inline void put_u8(std::vector<unsigned char>& v, std::uint8_t x) { v.push_back(x); }

inline void put_u16(std::vector<unsigned char>& v, std::uint16_t x) {
  v.push_back(static_cast<unsigned char>(x & 0xff));
  v.push_back(static_cast<unsigned char>(x >> 8));
}

inline void put_u32(std::vector<unsigned char>& v, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) v.push_back(static_cast<unsigned char>((x >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const unsigned char* p, std::size_t n) : p_(p), n_(n) {}
  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    const unsigned char* b = take(2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    const unsigned char* b = take(4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  float f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
  }
  const unsigned char* take(std::size_t k) {
    if (pos_ + k > n_) throw IoError("model file truncated");
    const unsigned char* out = p_ + pos_;
    pos_ += k;
    return out;
  }

 private:
  const unsigned char* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

}  // namespace model_io

inline void save_model(const std::string& path, const NetworkInstance& net) {
  using namespace model_io;
  const NetworkTopology& t = net.topo;
  std::vector<unsigned char> bytes;
  bytes.insert(bytes.end(), {'A', 'D', 'N', 'Z'});
  put_u8(bytes, 1);  // format version
  put_u16(bytes, static_cast<std::uint16_t>(t.in_bins));
  put_u8(bytes, t.activation == Activation::kRelu ? 0 : 1);
  put_u8(bytes, static_cast<std::uint8_t>(t.bottleneck));
  put_u16(bytes, static_cast<std::uint16_t>(t.hidden));
  put_u8(bytes, static_cast<std::uint8_t>(t.n_levels()));
  for (const auto& lv : t.enc) {
    put_u16(bytes, static_cast<std::uint16_t>(lv.c_out));
    put_u8(bytes, static_cast<std::uint8_t>(lv.kernel));
    put_u8(bytes, static_cast<std::uint8_t>(lv.stride));
    put_u8(bytes, lv.skip ? 1 : 0);
  }
  for (int c : t.dec_channels) put_u16(bytes, static_cast<std::uint16_t>(c));

  const auto plan = layer_plan(t);
  require(plan.size() == net.weights.size(), "save_model: weight list does not match plan");
  put_u32(bytes, static_cast<std::uint32_t>(plan.size()));
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const std::string& name = plan[i].name;
    put_u16(bytes, static_cast<std::uint16_t>(name.size()));
    bytes.insert(bytes.end(), name.begin(), name.end());
    const Tensor<double>& w = net.weights[i];
    put_u8(bytes, static_cast<std::uint8_t>(w.ndim()));
    for (std::size_t d : w.shape) put_u32(bytes, static_cast<std::uint32_t>(d));
    for (double v : w.data) {
      float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof(bits));
      put_u32(bytes, bits);
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model file: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write: " + path);
}

inline NetworkInstance load_model(const std::string& path) {
  using namespace model_io;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  Reader r(bytes.data(), bytes.size());
  const unsigned char* magic = r.take(4);
  if (std::memcmp(magic, "ADNZ", 4) != 0) throw IoError("not an ADNZ model file: " + path);
  const std::uint8_t version = r.u8();
  if (version != 1) throw IoError("unsupported model version " + std::to_string(version));

  NetworkInstance net;
  NetworkTopology& t = net.topo;
  t.in_bins = r.u16();
  t.activation = r.u8() == 0 ? Activation::kRelu : Activation::kTanh;
  t.bottleneck = static_cast<BottleneckKind>(r.u8());
  t.hidden = r.u16();
  const int n_levels = r.u8();
  t.enc.resize(static_cast<std::size_t>(n_levels));
  for (auto& lv : t.enc) {
    lv.c_out = r.u16();
    lv.kernel = r.u8();
    lv.stride = r.u8();
    lv.skip = r.u8() != 0;
  }
  t.dec_channels.resize(static_cast<std::size_t>(n_levels));
  for (int& c : t.dec_channels) c = r.u16();
  validate(t);

  const auto plan = layer_plan(t);
  const std::uint32_t n_tensors = r.u32();
  require(n_tensors == plan.size(), "load_model: tensor count does not match topology");
  net.weights.reserve(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const std::uint16_t name_len = r.u16();
    const unsigned char* name_bytes = r.take(name_len);
    const std::string name(reinterpret_cast<const char*>(name_bytes), name_len);
    require(name == plan[i].name, "load_model: unexpected tensor '" + name + "', wanted '" +
                                      plan[i].name + "'");
    const int ndim = r.u8();
    std::vector<std::size_t> shape(static_cast<std::size_t>(ndim));
    for (auto& d : shape) d = r.u32();
    require_shape(shape == plan[i].shape, "load_model: shape mismatch for " + name);
    Tensor<double> w(shape);
    for (auto& v : w.data) v = static_cast<double>(r.f32());
    net.weights.push_back(std::move(w));
  }
  return net;
}

}  // namespace adnz

#endif  // ADNZ_MODEL_HPP_
