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

// Network execution. Two deliberately independent paths:
//   * NetRunner<T>: allocation-free per-frame streaming inference (double for
//     exactness, float for deployment-speed measurements);
//   * forward_on_tape: batch forward over a frame window for training.
// The streaming/offline equivalence tests cross-check the two.
//
// GRU convention: z = s(Wz x + Uz h + bz), r = s(Wr x + Ur h + br),
// n = tanh(Wn x + r*(Un h) + bn), h' = (1-z)*n + z*h.
// LSTM convention: i,f,g,o gates; c' = f*c + i*g; h' = o*tanh(c').

#ifndef ADNZ_NETWORK_HPP_
#define ADNZ_NETWORK_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "adnz/common.hpp"
#include "adnz/model.hpp"
#include "adnz/tensor.hpp"

namespace adnz {

// Running-RMS input gain: 0.99/frame smoothing, first frame seeds the state.
inline constexpr double kRmsSmoothing = 0.99;
inline constexpr double kRmsFloor = 1e-6;

namespace net_detail {

template <typename T>
void conv1d_fwd(const T* x, int c_in, int w_in, const T* wgt, int c_out, int k, int stride,
                const T* bias, T* out) {
  const int w_out = w_in / stride;
  const int pad = k / 2;
  for (int co = 0; co < c_out; ++co) {
    T* orow = out + static_cast<std::ptrdiff_t>(co) * w_out;
    for (int ow = 0; ow < w_out; ++ow) orow[ow] = bias ? bias[co] : T(0);
    for (int ci = 0; ci < c_in; ++ci) {
      const T* xrow = x + static_cast<std::ptrdiff_t>(ci) * w_in;
      const T* wrow = wgt + (static_cast<std::ptrdiff_t>(co) * c_in + ci) * k;
      for (int kk = 0; kk < k; ++kk) {
        const T wv = wrow[kk];
        const int off = kk - pad;
        for (int ow = 0; ow < w_out; ++ow) {
          const int iw = ow * stride + off;
          if (iw < 0 || iw >= w_in) continue;
          orow[ow] += wv * xrow[iw];
        }
      }
    }
  }
}

template <typename T>
void tconv1d_fwd(const T* x, int c_in, int w_in, const T* wgt, int c_out, int k, int stride,
                 const T* bias, T* out) {
  const int w_out = w_in * stride;
  const int pad = k / 2;
  for (int co = 0; co < c_out; ++co) {
    T* orow = out + static_cast<std::ptrdiff_t>(co) * w_out;
    for (int ow = 0; ow < w_out; ++ow) orow[ow] = bias ? bias[co] : T(0);
  }
  for (int ci = 0; ci < c_in; ++ci) {
    const T* xrow = x + static_cast<std::ptrdiff_t>(ci) * w_in;
    for (int co = 0; co < c_out; ++co) {
      T* orow = out + static_cast<std::ptrdiff_t>(co) * w_out;
      const T* wrow = wgt + (static_cast<std::ptrdiff_t>(ci) * c_out + co) * k;
      for (int kk = 0; kk < k; ++kk) {
        const T wv = wrow[kk];
        const int off = kk - pad;
        for (int iw = 0; iw < w_in; ++iw) {
          const int ow = iw * stride + off;
          if (ow < 0 || ow >= w_out) continue;
          orow[ow] += wv * xrow[iw];
        }
      }
    }
  }
}

template <typename T>
void matvec(const T* w, int rows, int cols, const T* x, T* out) {
  for (int r = 0; r < rows; ++r) {
    const T* wrow = w + static_cast<std::ptrdiff_t>(r) * cols;
    T acc = T(0);
    for (int c = 0; c < cols; ++c) acc += wrow[c] * x[c];
    out[r] = acc;
  }
}

template <typename T>
void apply_activation(T* x, std::size_t n, Activation act) {
  if (act == Activation::kRelu) {
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > T(0) ? x[i] : T(0);
  } else {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::tanh(x[i]);
  }
}

template <typename T>
T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

}  // namespace net_detail

// Raw-frame RMS over the 2*bins feature values of one frame.
inline double frame_rms(const std::complex<double>* bins, int n) {
  double acc = 0.0;
  for (int b = 0; b < n; ++b) acc += std::norm(bins[b]);
  return std::sqrt(acc / (2.0 * n));
}

// Allocation-free streaming inference over one audio stream. Holds the
// recurrent state; step() advances exactly one frame and depends only on
// current and past input.
template <typename T>
class NetRunner {
 public:
  explicit NetRunner(const NetworkInstance& net) : topo_(net.topo) {
    validate(topo_);
    const auto plan = layer_plan(topo_);
    weights_.resize(plan.size());
    for (std::size_t i = 0; i < plan.size(); ++i) {
      index_[plan[i].name] = static_cast<int>(i);
      weights_[i].assign(net.weights[i].data.begin(), net.weights[i].data.end());
    }
    const int levels = topo_.n_levels();
    features_.assign(static_cast<std::size_t>(2 * topo_.in_bins), T(0));
    enc_out_.resize(static_cast<std::size_t>(levels));
    for (int i = 0; i < levels; ++i) {
      enc_out_[static_cast<std::size_t>(i)].assign(
          static_cast<std::size_t>(topo_.enc[static_cast<std::size_t>(i)].c_out *
                                   topo_.width_at(i + 1)),
          T(0));
    }
    if (topo_.bottleneck == BottleneckKind::kConv) {
      bn_hidden_.assign(static_cast<std::size_t>(topo_.hidden * topo_.width_at(levels)), T(0));
    } else {
      const std::size_t h = static_cast<std::size_t>(topo_.hidden);
      hidden_.assign(h, T(0));
      cell_.assign(h, T(0));
      gate_a_.assign(h, T(0));
      gate_b_.assign(h, T(0));
      gate_c_.assign(h, T(0));
      gate_d_.assign(h, T(0));
      scratch_h_.assign(h, T(0));
    }
    bn_out_.assign(static_cast<std::size_t>(topo_.bottleneck_io()), T(0));
    dec_in_.resize(static_cast<std::size_t>(levels));
    dec_out_.resize(static_cast<std::size_t>(levels));
    for (int i = levels - 1; i >= 0; --i) {
      dec_in_[static_cast<std::size_t>(i)].assign(
          static_cast<std::size_t>(topo_.dec_in_channels(i) * topo_.width_at(i + 1)), T(0));
      dec_out_[static_cast<std::size_t>(i)].assign(
          static_cast<std::size_t>(topo_.dec_channels[static_cast<std::size_t>(i)] *
                                   topo_.width_at(i)),
          T(0));
    }
    head_out_.assign(static_cast<std::size_t>(2 * topo_.in_bins), T(0));
    reset();
  }

  const NetworkTopology& topology() const { return topo_; }

  void reset() {
    std::fill(hidden_.begin(), hidden_.end(), T(0));
    std::fill(cell_.begin(), cell_.end(), T(0));
    rms_state_ = 0.0;
    primed_ = false;
  }

  // One frame of noisy one-sided STFT bins (in_bins + 1, Nyquist last) to one
  // compressed mask frame. The Nyquist bin gets an identity mask.
  MaskFrame step(const std::complex<double>* bins, int n_bins) {
    require_shape(n_bins == topo_.in_bins + 1,
                  "stream_step: got " + std::to_string(n_bins) + " bins, network wants " +
                      std::to_string(topo_.in_bins + 1));
    const int nb = topo_.in_bins;

    // Running RMS gain, shared definition with the batch path.
    const double rms = frame_rms(bins, nb);
    rms_state_ = primed_ ? kRmsSmoothing * rms_state_ + (1.0 - kRmsSmoothing) * rms : rms;
    primed_ = true;
    const double gain = 1.0 / std::max(rms_state_, kRmsFloor);
    for (int b = 0; b < nb; ++b) {
      features_[static_cast<std::size_t>(b)] = static_cast<T>(bins[b].real() * gain);
      features_[static_cast<std::size_t>(nb + b)] = static_cast<T>(bins[b].imag() * gain);
    }

    forward(features_.data());

    MaskFrame out;
    out.m.resize(static_cast<std::size_t>(n_bins));
    for (int b = 0; b < nb; ++b) {
      out.m[static_cast<std::size_t>(b)] = {
          static_cast<double>(head_out_[static_cast<std::size_t>(b)]),
          static_cast<double>(head_out_[static_cast<std::size_t>(nb + b)])};
    }
    out.m[static_cast<std::size_t>(nb)] = {cirm_compress(1.0), 0.0};
    return out;
  }

 private:
  const std::vector<T>& w(const std::string& name) const {
    return weights_[static_cast<std::size_t>(index_.at(name))];
  }

  void forward(const T* features) {
    using namespace net_detail;
    const int levels = topo_.n_levels();
    const Activation act = topo_.activation;

    const T* cur = features;
    for (int i = 0; i < levels; ++i) {
      const auto& lv = topo_.enc[static_cast<std::size_t>(i)];
      auto& out = enc_out_[static_cast<std::size_t>(i)];
      conv1d_fwd(cur, topo_.enc_in_channels(i), topo_.width_at(i),
                 w("enc" + std::to_string(i) + ".w").data(), lv.c_out, lv.kernel, lv.stride,
                 w("enc" + std::to_string(i) + ".b").data(), out.data());
      apply_activation(out.data(), out.size(), act);
      cur = out.data();
    }

    const int w_last = topo_.width_at(levels);
    const int c_last = topo_.enc.back().c_out;
    if (topo_.bottleneck == BottleneckKind::kConv) {
      conv1d_fwd(cur, c_last, w_last, w("bn.conv1.w").data(), topo_.hidden, 3, 1,
                 w("bn.conv1.b").data(), bn_hidden_.data());
      apply_activation(bn_hidden_.data(), bn_hidden_.size(), act);
      conv1d_fwd(bn_hidden_.data(), topo_.hidden, w_last, w("bn.conv2.w").data(), c_last, 3, 1,
                 w("bn.conv2.b").data(), bn_out_.data());
      apply_activation(bn_out_.data(), bn_out_.size(), act);
    } else {
      recurrent_step(cur);
      const int io = topo_.bottleneck_io();
      matvec(w("bn.proj.w").data(), io, topo_.hidden, hidden_.data(), bn_out_.data());
      const auto& pb = w("bn.proj.b");
      for (int i = 0; i < io; ++i) bn_out_[static_cast<std::size_t>(i)] += pb[static_cast<std::size_t>(i)];
      apply_activation(bn_out_.data(), bn_out_.size(), act);
    }

    const T* dec_cur = bn_out_.data();
    int dec_cur_c = c_last;
    for (int i = levels - 1; i >= 0; --i) {
      const auto& lv = topo_.enc[static_cast<std::size_t>(i)];
      const int w_in = topo_.width_at(i + 1);
      auto& din = dec_in_[static_cast<std::size_t>(i)];
      const T* src = dec_cur;
      int c_in = dec_cur_c;
      if (lv.skip) {
        // concat [current; encoder level output] along channels
        std::copy(dec_cur, dec_cur + static_cast<std::ptrdiff_t>(dec_cur_c) * w_in, din.begin());
        const auto& enc = enc_out_[static_cast<std::size_t>(i)];
        std::copy(enc.begin(), enc.end(),
                  din.begin() + static_cast<std::ptrdiff_t>(dec_cur_c) * w_in);
        src = din.data();
        c_in = topo_.dec_in_channels(i);
      }
      auto& dout = dec_out_[static_cast<std::size_t>(i)];
      tconv1d_fwd(src, c_in, w_in, w("dec" + std::to_string(i) + ".w").data(),
                  topo_.dec_channels[static_cast<std::size_t>(i)], lv.kernel, lv.stride,
                  w("dec" + std::to_string(i) + ".b").data(), dout.data());
      apply_activation(dout.data(), dout.size(), act);
      dec_cur = dout.data();
      dec_cur_c = topo_.dec_channels[static_cast<std::size_t>(i)];
    }

    conv1d_fwd(dec_cur, dec_cur_c, topo_.in_bins, w("head.w").data(), 2, 1, 1,
               w("head.b").data(), head_out_.data());
    // K*tanh(z/K): bounded by the compression limit, unit slope around zero
    const T bound = static_cast<T>(kCirmK);
    for (auto& v : head_out_) v = bound * std::tanh(v / bound);
  }

  void recurrent_step(const T* x) {
    using namespace net_detail;
    const int h = topo_.hidden;
    const int io = topo_.bottleneck_io();
    if (topo_.bottleneck == BottleneckKind::kGru) {
      // z, r gates
      matvec(w("bn.wz").data(), h, io, x, gate_a_.data());
      matvec(w("bn.uz").data(), h, h, hidden_.data(), scratch_h_.data());
      const auto& bz = w("bn.bz");
      for (int i = 0; i < h; ++i) {
        gate_a_[static_cast<std::size_t>(i)] = sigmoid(
            gate_a_[static_cast<std::size_t>(i)] + scratch_h_[static_cast<std::size_t>(i)] +
            bz[static_cast<std::size_t>(i)]);
      }
      matvec(w("bn.wr").data(), h, io, x, gate_b_.data());
      matvec(w("bn.ur").data(), h, h, hidden_.data(), scratch_h_.data());
      const auto& br = w("bn.br");
      for (int i = 0; i < h; ++i) {
        gate_b_[static_cast<std::size_t>(i)] = sigmoid(
            gate_b_[static_cast<std::size_t>(i)] + scratch_h_[static_cast<std::size_t>(i)] +
            br[static_cast<std::size_t>(i)]);
      }
      // candidate
      matvec(w("bn.wn").data(), h, io, x, gate_c_.data());
      matvec(w("bn.un").data(), h, h, hidden_.data(), scratch_h_.data());
      const auto& bn = w("bn.bn");
      for (int i = 0; i < h; ++i) {
        const T n = std::tanh(gate_c_[static_cast<std::size_t>(i)] +
                              gate_b_[static_cast<std::size_t>(i)] *
                                  scratch_h_[static_cast<std::size_t>(i)] +
                              bn[static_cast<std::size_t>(i)]);
        const T z = gate_a_[static_cast<std::size_t>(i)];
        hidden_[static_cast<std::size_t>(i)] =
            (T(1) - z) * n + z * hidden_[static_cast<std::size_t>(i)];
      }
    } else {
      const char* names[4] = {"i", "f", "g", "o"};
      std::vector<T>* gates[4] = {&gate_a_, &gate_b_, &gate_c_, &gate_d_};
      for (int gi = 0; gi < 4; ++gi) {
        matvec(w(std::string("bn.w") + names[gi]).data(), h, io, x, gates[gi]->data());
        matvec(w(std::string("bn.u") + names[gi]).data(), h, h, hidden_.data(),
               scratch_h_.data());
        const auto& b = w(std::string("bn.b") + names[gi]);
        for (int i = 0; i < h; ++i) {
          T v = (*gates[gi])[static_cast<std::size_t>(i)] +
                scratch_h_[static_cast<std::size_t>(i)] + b[static_cast<std::size_t>(i)];
          (*gates[gi])[static_cast<std::size_t>(i)] = gi == 2 ? std::tanh(v) : sigmoid(v);
        }
      }
      for (int i = 0; i < h; ++i) {
        const std::size_t s = static_cast<std::size_t>(i);
        cell_[s] = gate_b_[s] * cell_[s] + gate_a_[s] * gate_c_[s];
        hidden_[s] = gate_d_[s] * std::tanh(cell_[s]);
      }
    }
  }

  NetworkTopology topo_;
  std::vector<std::vector<T>> weights_;
  std::map<std::string, int> index_;

  std::vector<T> features_;
  std::vector<std::vector<T>> enc_out_;
  std::vector<T> bn_hidden_;
  std::vector<T> bn_out_;
  std::vector<std::vector<T>> dec_in_;
  std::vector<std::vector<T>> dec_out_;
  std::vector<T> head_out_;

  std::vector<T> hidden_, cell_;
  std::vector<T> gate_a_, gate_b_, gate_c_, gate_d_, scratch_h_;
  double rms_state_ = 0.0;
  bool primed_ = false;
};

// ---- batch (training) path -------------------------------------------------

// Normalized [2, bins] feature tensors for a frame sequence; identical
// recursion to NetRunner's in-stream normalization.
inline std::vector<Tensor<double>> normalized_features(const Spectrogram& noisy,
                                                       int bins = kNetworkBins) {
  require_shape(noisy.n_bins >= bins + 1, "features: spectrogram has too few bins");
  std::vector<Tensor<double>> frames;
  frames.reserve(static_cast<std::size_t>(noisy.n_frames()));
  double rms_state = 0.0;
  bool primed = false;
  for (int t = 0; t < noisy.n_frames(); ++t) {
    const std::complex<double>* f = noisy.frame(t);
    const double rms = frame_rms(f, bins);
    rms_state = primed ? kRmsSmoothing * rms_state + (1.0 - kRmsSmoothing) * rms : rms;
    primed = true;
    const double gain = 1.0 / std::max(rms_state, kRmsFloor);
    Tensor<double> feat({2, static_cast<std::size_t>(bins)});
    for (int b = 0; b < bins; ++b) {
      feat.data[static_cast<std::size_t>(b)] = f[b].real() * gain;
      feat.data[static_cast<std::size_t>(bins + b)] = f[b].imag() * gain;
    }
    frames.push_back(std::move(feat));
  }
  return frames;
}

// Compressed-target tensors [2, bins] from ground-truth mask frames.
inline std::vector<Tensor<double>> mask_targets(const std::vector<MaskFrame>& masks,
                                                int bins = kNetworkBins) {
  std::vector<Tensor<double>> out;
  out.reserve(masks.size());
  for (const MaskFrame& mf : masks) {
    require_shape(static_cast<int>(mf.m.size()) >= bins, "mask_targets: too few bins");
    Tensor<double> t({2, static_cast<std::size_t>(bins)});
    for (int b = 0; b < bins; ++b) {
      t.data[static_cast<std::size_t>(b)] = mf.m[static_cast<std::size_t>(b)].real();
      t.data[static_cast<std::size_t>(bins + b)] = mf.m[static_cast<std::size_t>(b)].imag();
    }
    out.push_back(std::move(t));
  }
  return out;
}

// Weight tensors registered on a tape, ordered by layer_plan.
struct TapeNet {
  std::vector<Var> weight_vars;
  const NetworkInstance* net = nullptr;

  Var w(const std::string& name) const {
    return weight_vars[static_cast<std::size_t>(net->weight_index(name))];
  }
};

inline TapeNet register_network(Tape<double>& tape, const NetworkInstance& net, bool trainable) {
  TapeNet tn;
  tn.net = &net;
  tn.weight_vars.reserve(net.weights.size());
  for (const auto& w : net.weights) tn.weight_vars.push_back(tape.input(w, trainable));
  return tn;
}

// Unrolled batch forward over a frame window; recurrent state starts at zero.
// Returns one [2, bins] mask var per frame.
inline std::vector<Var> forward_on_tape(Tape<double>& tape, const TapeNet& tn,
                                        const std::vector<Tensor<double>>& features) {
  const NetworkTopology& topo = tn.net->topo;
  const Activation act = topo.activation;
  const int levels = topo.n_levels();
  const auto u = [](int v) { return static_cast<std::size_t>(v); };

  const auto activate = [&](Var v) {
    return act == Activation::kRelu ? tape.relu(v) : tape.tanh(v);
  };

  Var h = tape.input(Tensor<double>({u(topo.hidden)}), false);
  Var c = h;
  std::vector<Var> masks;
  masks.reserve(features.size());

  for (const Tensor<double>& feat : features) {
    Var cur = tape.input(feat, false);
    std::vector<Var> enc_outs;
    enc_outs.reserve(u(levels));
    for (int i = 0; i < levels; ++i) {
      const auto& lv = topo.enc[u(i)];
      Var conv = tape.conv1d(cur, tn.w("enc" + std::to_string(i) + ".w"), lv.stride);
      cur = activate(tape.add_bias(conv, tn.w("enc" + std::to_string(i) + ".b")));
      enc_outs.push_back(cur);
    }

    Var bno{};
    if (topo.bottleneck == BottleneckKind::kConv) {
      Var h1 = activate(tape.add_bias(tape.conv1d(cur, tn.w("bn.conv1.w"), 1),
                                      tn.w("bn.conv1.b")));
      bno = activate(tape.add_bias(tape.conv1d(h1, tn.w("bn.conv2.w"), 1), tn.w("bn.conv2.b")));
    } else {
      const int io = topo.bottleneck_io();
      Var x = tape.reshape(cur, {u(io)});
      if (topo.bottleneck == BottleneckKind::kGru) {
        Var z = tape.sigmoid(tape.add(
            tape.add(tape.matmul(tn.w("bn.wz"), x), tape.matmul(tn.w("bn.uz"), h)),
            tn.w("bn.bz")));
        Var r = tape.sigmoid(tape.add(
            tape.add(tape.matmul(tn.w("bn.wr"), x), tape.matmul(tn.w("bn.ur"), h)),
            tn.w("bn.br")));
        Var n = tape.tanh(tape.add(
            tape.add(tape.matmul(tn.w("bn.wn"), x), tape.mul(r, tape.matmul(tn.w("bn.un"), h))),
            tn.w("bn.bn")));
        // h' = (1 - z) * n + z * h = n - z*n + z*h
        h = tape.add(tape.sub(n, tape.mul(z, n)), tape.mul(z, h));
      } else {
        const auto gate = [&](const std::string& g, bool is_tanh) {
          Var pre = tape.add(
              tape.add(tape.matmul(tn.w("bn.w" + g), x), tape.matmul(tn.w("bn.u" + g), h)),
              tn.w("bn.b" + g));
          return is_tanh ? tape.tanh(pre) : tape.sigmoid(pre);
        };
        Var ig = gate("i", false);
        Var fg = gate("f", false);
        Var gg = gate("g", true);
        Var og = gate("o", false);
        c = tape.add(tape.mul(fg, c), tape.mul(ig, gg));
        h = tape.mul(og, tape.tanh(c));
      }
      Var proj = activate(tape.add(tape.matmul(tn.w("bn.proj.w"), h), tn.w("bn.proj.b")));
      bno = tape.reshape(proj, {u(topo.enc.back().c_out), u(topo.width_at(levels))});
    }

    Var dec = bno;
    for (int i = levels - 1; i >= 0; --i) {
      const auto& lv = topo.enc[u(i)];
      Var in = lv.skip ? tape.concat_rows(dec, enc_outs[u(i)]) : dec;
      Var tc = tape.tconv1d(in, tn.w("dec" + std::to_string(i) + ".w"), lv.stride);
      dec = activate(tape.add_bias(tc, tn.w("dec" + std::to_string(i) + ".b")));
    }

    Var head = tape.add_bias(tape.conv1d(dec, tn.w("head.w"), 1), tn.w("head.b"));
    masks.push_back(tape.scale(tape.tanh(tape.scale(head, 1.0 / kCirmK)), kCirmK));
  }
  return masks;
}

// Mask-approximation loss: squared error between predicted and target
// compressed masks, summed within a frame and averaged over frames. The
// per-frame normalization keeps gradient magnitudes in a range plain
// momentum SGD can use at learning rates within [1e-6, 1].
inline Var mask_mse_loss(Tape<double>& tape, const std::vector<Var>& masks,
                         const std::vector<Tensor<double>>& targets) {
  require_shape(masks.size() == targets.size() && !masks.empty(),
                "mask_mse_loss: frame count mismatch");
  Var total{};
  bool first = true;
  for (std::size_t t = 0; t < masks.size(); ++t) {
    Var tgt = tape.input(targets[t], false);
    Var d = tape.sub(masks[t], tgt);
    Var sse = tape.sum(tape.mul(d, d));
    total = first ? sse : tape.add(total, sse);
    first = false;
  }
  return tape.scale(total, 1.0 / static_cast<double>(masks.size()));
}

// ---- offline enhancement ---------------------------------------------------

// Full offline pipeline: STFT -> per-frame masks -> apply -> WOLA, then
// linear dry/wet interpolation at mix_ratio (0..100). Output length is the
// WOLA reconstruction length, <= input length.
inline AudioBuffer enhance_offline(const NetworkInstance& net, const AudioBuffer& noisy,
                                   const StftConfig& cfg, int mix_ratio) {
  require_config(mix_ratio >= 0 && mix_ratio <= 100, "enhance_offline: mix ratio out of 0..100");
  Spectrogram spec = stft(noisy, cfg);
  if (mix_ratio == 0) {
    // fully dry: the network never touches the signal
    const std::size_t out_len =
        static_cast<std::size_t>(spec.n_frames() - 1) * static_cast<std::size_t>(cfg.hop) +
        static_cast<std::size_t>(cfg.window_len);
    AudioBuffer dry;
    dry.sample_rate = noisy.sample_rate;
    dry.samples.assign(noisy.samples.begin(),
                       noisy.samples.begin() + static_cast<std::ptrdiff_t>(out_len));
    return dry;
  }
  NetRunner<double> runner(net);
  Spectrogram wet_spec = spec;
  for (int t = 0; t < spec.n_frames(); ++t) {
    const MaskFrame mask = runner.step(spec.frame(t), spec.n_bins);
    const auto masked = apply_mask(spec.frame(t), spec.n_bins, mask);
    std::copy(masked.begin(), masked.end(), wet_spec.frame(t));
  }
  AudioBuffer wet = istft(wet_spec);
  const double a = mix_ratio / 100.0;
  AudioBuffer out;
  out.sample_rate = noisy.sample_rate;
  out.samples.resize(wet.size());
  for (std::size_t i = 0; i < wet.size(); ++i) {
    out.samples[i] = (1.0 - a) * noisy.samples[i] + a * wet.samples[i];
  }
  return out;
}

// SI-SDR over the settled region: half a window trimmed at each end so WOLA
// warm-up does not enter the score.
inline double si_sdr_settled(const AudioBuffer& reference, const AudioBuffer& estimate,
                             const StftConfig& cfg) {
  const std::size_t n = std::min(reference.size(), estimate.size());
  const std::size_t trim = static_cast<std::size_t>(cfg.window_len / 2);
  require(n > 2 * trim, "si_sdr_settled: signal shorter than the trim region");
  AudioBuffer ref_trim{{reference.samples.begin() + static_cast<std::ptrdiff_t>(trim),
                        reference.samples.begin() + static_cast<std::ptrdiff_t>(n - trim)},
                       reference.sample_rate};
  AudioBuffer est_trim{{estimate.samples.begin() + static_cast<std::ptrdiff_t>(trim),
                        estimate.samples.begin() + static_cast<std::ptrdiff_t>(n - trim)},
                       estimate.sample_rate};
  return si_sdr(ref_trim, est_trim);
}

// Mean SI-SDR improvement (dB) of the fully-wet model output over the noisy
// mixture, averaged across scenes.
inline double mean_sisdr_improvement(const NetworkInstance& net,
                                     const std::vector<Mixture>& scenes, const StftConfig& cfg) {
  require(!scenes.empty(), "mean_sisdr_improvement: no scenes");
  double acc = 0.0;
  for (const Mixture& mix : scenes) {
    AudioBuffer out = enhance_offline(net, mix.mixed, cfg, 100);
    acc += si_sdr_settled(mix.clean, out, cfg) - si_sdr_settled(mix.clean, mix.mixed, cfg);
  }
  return acc / static_cast<double>(scenes.size());
}

}  // namespace adnz

#endif  // ADNZ_NETWORK_HPP_
