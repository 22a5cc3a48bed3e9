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

// Iterative structured magnitude pruning of output channels.
//
// Saliency is the L1 norm of the channel's producing weight slice including
// its bias. Removing a channel also removes the matching input slices from
// every consumer; the subtle cases are the flattened recurrent bottleneck
// input (one encoder channel spans width_at(L) flat indices), the bottleneck
// output (projection rows / conv2 rows), and skip-connection consumers on the
// decoder side, whose concat input is [upstream block | encoder block].
// Recurrent layers prune whole hidden units across all gates. The 2-channel
// output head is never prunable.

#ifndef ADNZ_PRUNE_HPP_
#define ADNZ_PRUNE_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "adnz/common.hpp"
#include "adnz/train.hpp"

namespace adnz {

namespace prune_detail {

// Removes the given sorted indices along `axis` of a 1-3 dimensional tensor.
inline Tensor<double> remove_along_axis(const Tensor<double>& t, int axis,
                                        const std::vector<int>& removed) {
  std::vector<bool> drop(t.shape[static_cast<std::size_t>(axis)], false);
  for (int r : removed) {
    require(r >= 0 && r < static_cast<int>(t.shape[static_cast<std::size_t>(axis)]),
            "prune: index out of range");
    drop[static_cast<std::size_t>(r)] = true;
  }
  std::vector<std::size_t> shape = t.shape;
  shape[static_cast<std::size_t>(axis)] -= removed.size();
  Tensor<double> out(shape);

  // normalize to a 3-d view [a, b, c]
  std::size_t dims[3] = {1, 1, 1};
  for (int i = 0; i < t.ndim(); ++i) dims[static_cast<std::size_t>(i)] = t.shape[static_cast<std::size_t>(i)];
  std::size_t idx = 0;
  for (std::size_t a = 0; a < dims[0]; ++a) {
    if (axis == 0 && drop[a]) continue;
    for (std::size_t b = 0; b < dims[1]; ++b) {
      if (axis == 1 && drop[b]) continue;
      for (std::size_t c = 0; c < dims[2]; ++c) {
        if (axis == 2 && drop[c]) continue;
        out.data[idx++] = t.data[(a * dims[1] + b) * dims[2] + c];
      }
    }
  }
  return out;
}

inline std::vector<int> flat_indices_for_channels(const std::vector<int>& channels, int width) {
  std::vector<int> out;
  out.reserve(channels.size() * static_cast<std::size_t>(width));
  for (int c : channels) {
    for (int j = 0; j < width; ++j) out.push_back(c * width + j);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<int> offset_indices(const std::vector<int>& idx, int offset) {
  std::vector<int> out = idx;
  for (int& v : out) v += offset;
  return out;
}

inline double l1(const double* p, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::abs(p[i]);
  return acc;
}

inline std::vector<std::string> recurrent_gates(BottleneckKind kind) {
  return kind == BottleneckKind::kGru ? std::vector<std::string>{"z", "r", "n"}
                                      : std::vector<std::string>{"i", "f", "g", "o"};
}

}  // namespace prune_detail

// Prunable layer ids, ordered from the output side towards the input side.
inline std::vector<std::string> prunable_layers(const NetworkTopology& topo) {
  std::vector<std::string> out;
  for (int i = 0; i < topo.n_levels(); ++i) out.push_back("dec" + std::to_string(i));
  out.push_back("bn");
  for (int i = topo.n_levels() - 1; i >= 0; --i) out.push_back("enc" + std::to_string(i));
  return out;
}

inline int layer_channels(const NetworkTopology& topo, const std::string& layer) {
  if (layer == "bn") return topo.hidden;
  if (layer.rfind("enc", 0) == 0) {
    const int i = std::stoi(layer.substr(3));
    require(i >= 0 && i < topo.n_levels(), "prune: no such layer " + layer);
    return topo.enc[static_cast<std::size_t>(i)].c_out;
  }
  if (layer.rfind("dec", 0) == 0) {
    const int i = std::stoi(layer.substr(3));
    require(i >= 0 && i < topo.n_levels(), "prune: no such layer " + layer);
    return topo.dec_channels[static_cast<std::size_t>(i)];
  }
  if (layer == "head") throw Error("prune: the output head is protected");
  throw Error("prune: no such layer " + layer);
}

// L1 of the producing weight slice plus bias, per output channel.
inline std::vector<double> channel_saliency(const NetworkInstance& net,
                                            const std::string& layer) {
  using namespace prune_detail;
  const NetworkTopology& topo = net.topo;
  const int channels = layer_channels(topo, layer);
  std::vector<double> saliency(static_cast<std::size_t>(channels), 0.0);

  if (layer.rfind("enc", 0) == 0) {
    const Tensor<double>& w = net.weight(layer + ".w");
    const Tensor<double>& b = net.weight(layer + ".b");
    const std::size_t slice = w.shape[1] * w.shape[2];
    for (int c = 0; c < channels; ++c) {
      saliency[static_cast<std::size_t>(c)] =
          l1(w.data.data() + static_cast<std::size_t>(c) * slice, slice) +
          std::abs(b.data[static_cast<std::size_t>(c)]);
    }
  } else if (layer.rfind("dec", 0) == 0) {
    const Tensor<double>& w = net.weight(layer + ".w");  // [Cin, Cout, K]
    const Tensor<double>& b = net.weight(layer + ".b");
    const std::size_t c_in = w.shape[0], c_out = w.shape[1], k = w.shape[2];
    for (std::size_t co = 0; co < c_out; ++co) {
      double acc = std::abs(b.data[co]);
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        acc += l1(w.data.data() + (ci * c_out + co) * k, k);
      }
      saliency[co] = acc;
    }
  } else if (layer == "bn") {
    if (topo.bottleneck == BottleneckKind::kConv) {
      const Tensor<double>& w = net.weight("bn.conv1.w");
      const Tensor<double>& b = net.weight("bn.conv1.b");
      const std::size_t slice = w.shape[1] * w.shape[2];
      for (int c = 0; c < channels; ++c) {
        saliency[static_cast<std::size_t>(c)] =
            l1(w.data.data() + static_cast<std::size_t>(c) * slice, slice) +
            std::abs(b.data[static_cast<std::size_t>(c)]);
      }
    } else {
      for (const std::string& gate : recurrent_gates(topo.bottleneck)) {
        const Tensor<double>& w = net.weight("bn.w" + gate);
        const Tensor<double>& u = net.weight("bn.u" + gate);
        const Tensor<double>& b = net.weight("bn.b" + gate);
        for (int j = 0; j < channels; ++j) {
          saliency[static_cast<std::size_t>(j)] +=
              l1(w.data.data() + static_cast<std::size_t>(j) * w.shape[1], w.shape[1]) +
              l1(u.data.data() + static_cast<std::size_t>(j) * u.shape[1], u.shape[1]) +
              std::abs(b.data[static_cast<std::size_t>(j)]);
        }
      }
    }
  }
  return saliency;
}

// Removes the k lowest-saliency output channels of `layer`, fixing every
// consumer's input slices. Returns a structurally consistent new network.
inline NetworkInstance prune_channels(const NetworkInstance& net, const std::string& layer,
                                      int k) {
  using namespace prune_detail;
  require(k >= 0, "prune: negative channel count");
  if (layer == "head") throw Error("prune: the output head is protected");
  NetworkInstance out = net;
  if (k == 0) return out;

  const NetworkTopology& topo = net.topo;
  const int channels = layer_channels(topo, layer);
  require(channels > k, "prune: layer " + layer + " has " + std::to_string(channels) +
                            " channels, cannot remove " + std::to_string(k));

  const std::vector<double> saliency = channel_saliency(net, layer);
  std::vector<int> order(static_cast<std::size_t>(channels));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return saliency[static_cast<std::size_t>(a)] < saliency[static_cast<std::size_t>(b)];
  });
  std::vector<int> removed(order.begin(), order.begin() + k);
  std::sort(removed.begin(), removed.end());

  const auto edit = [&out](const std::string& name, int axis, const std::vector<int>& idx) {
    Tensor<double>& w = out.weight(name);
    w = remove_along_axis(w, axis, idx);
  };

  const int levels = topo.n_levels();
  if (layer.rfind("enc", 0) == 0) {
    const int i = std::stoi(layer.substr(3));
    edit(layer + ".w", 0, removed);
    edit(layer + ".b", 0, removed);
    if (i + 1 < levels) {
      edit("enc" + std::to_string(i + 1) + ".w", 1, removed);
    } else {
      // last encoder level: bottleneck input AND output, plus the deepest
      // decoder's upstream input block
      const int w_last = topo.width_at(levels);
      if (topo.bottleneck == BottleneckKind::kConv) {
        edit("bn.conv1.w", 1, removed);
        edit("bn.conv2.w", 0, removed);
        edit("bn.conv2.b", 0, removed);
      } else {
        const std::vector<int> flat = flat_indices_for_channels(removed, w_last);
        for (const std::string& gate : recurrent_gates(topo.bottleneck)) {
          edit("bn.w" + gate, 1, flat);
        }
        edit("bn.proj.w", 0, flat);
        edit("bn.proj.b", 0, flat);
      }
      std::vector<int> dec_rows = removed;  // upstream block starts at row 0
      if (topo.enc[static_cast<std::size_t>(i)].skip) {
        const auto skip_rows = offset_indices(removed, channels);
        dec_rows.insert(dec_rows.end(), skip_rows.begin(), skip_rows.end());
        std::sort(dec_rows.begin(), dec_rows.end());
      }
      edit("dec" + std::to_string(i) + ".w", 0, dec_rows);
    }
    if (i + 1 < levels && topo.enc[static_cast<std::size_t>(i)].skip) {
      // skip consumer: encoder block sits after the upstream block
      const int upstream = topo.dec_channels[static_cast<std::size_t>(i + 1)];
      edit("dec" + std::to_string(i) + ".w", 0, offset_indices(removed, upstream));
    }
    out.topo.enc[static_cast<std::size_t>(i)].c_out -= k;
  } else if (layer.rfind("dec", 0) == 0) {
    const int i = std::stoi(layer.substr(3));
    edit(layer + ".w", 1, removed);
    edit(layer + ".b", 0, removed);
    if (i > 0) {
      edit("dec" + std::to_string(i - 1) + ".w", 0, removed);  // upstream block is first
    } else {
      edit("head.w", 1, removed);
    }
    out.topo.dec_channels[static_cast<std::size_t>(i)] -= k;
  } else if (layer == "bn") {
    if (topo.bottleneck == BottleneckKind::kConv) {
      edit("bn.conv1.w", 0, removed);
      edit("bn.conv1.b", 0, removed);
      edit("bn.conv2.w", 1, removed);
    } else {
      for (const std::string& gate : recurrent_gates(topo.bottleneck)) {
        edit("bn.w" + gate, 0, removed);
        edit("bn.u" + gate, 0, removed);
        edit("bn.u" + gate, 1, removed);
        edit("bn.b" + gate, 0, removed);
      }
      edit("bn.proj.w", 1, removed);
    }
    out.topo.hidden -= k;
  } else {
    throw Error("prune: no such layer " + layer);
  }

  validate(out.topo);
  const auto plan = layer_plan(out.topo);
  require(plan.size() == out.weights.size(), "prune: weight count diverged");
  for (std::size_t i = 0; i < plan.size(); ++i) {
    require_shape(plan[i].shape == out.weights[i].shape,
                  "prune: structural mismatch at " + plan[i].name);
  }
  return out;
}

// ---- iterative prune / fine-tune loop ---------------------------------------

struct PruneSchedule {
  double fraction_per_step = 0.05;
  int finetune_steps = 100;
  int passes = 1;
  double quality_floor_db = -1e9;  // minimum allowed SI-SDR improvement
  double finetune_lr = 0.002;
  int batch_frames = 32;
};

inline void validate(const PruneSchedule& s) {
  require_config(s.fraction_per_step > 0.0 && s.fraction_per_step <= 0.25,
                 "prune: fraction_per_step out of (0, 0.25]");
  require_config(s.passes >= 1, "prune: passes must be >= 1");
  require_config(s.finetune_steps >= 0, "prune: negative finetune steps");
}

struct PruneStep {
  int pass = 0;
  std::string layer;
  int removed = 0;
  long long macs_before = 0;
  long long macs_after = 0;
  double quality_db = 0.0;
  bool kept = true;
};

struct PruneReport {
  std::vector<PruneStep> steps;
  long long macs_initial = 0;
  long long macs_final = 0;
  double quality_initial = 0.0;
  double quality_final = 0.0;
  bool floor_violated_at_first_step = false;

  double mac_reduction() const {
    return macs_initial == 0
               ? 0.0
               : 1.0 - static_cast<double>(macs_final) / static_cast<double>(macs_initial);
  }
};

struct PruneLoopResult {
  NetworkInstance net;
  PruneReport report;
};

// Per pass, walks the layers output-side to input-side, removes
// ceil(fraction * channels) (at least 1) lowest-norm channels, fine-tunes,
// and stops early when quality falls below the floor. A violating step is
// rolled back; a violation at the very first step returns the original
// network with zero net pruning.
inline PruneLoopResult prune_loop(const NetworkInstance& net, const PruneSchedule& schedule,
                                  const std::vector<Mixture>& train_scenes,
                                  const std::vector<Mixture>& eval_scenes, Rng& rng,
                                  const StftConfig& stft_cfg = StftConfig{}) {
  validate(schedule);
  const auto prepared = prepare_scenes(train_scenes, stft_cfg);

  PruneLoopResult result;
  result.net = net;
  result.report.macs_initial = count_macs(net);
  result.report.quality_initial = mean_sisdr_improvement(net, eval_scenes, stft_cfg);
  result.report.quality_final = result.report.quality_initial;

  bool first_step = true;
  for (int pass = 0; pass < schedule.passes; ++pass) {
    for (const std::string& layer : prunable_layers(result.net.topo)) {
      const int channels = layer_channels(result.net.topo, layer);
      if (channels <= 1) continue;
      const int k = std::min(
          channels - 1,
          std::max(1, static_cast<int>(std::ceil(schedule.fraction_per_step * channels))));

      NetworkInstance candidate = prune_channels(result.net, layer, k);
      if (schedule.finetune_steps > 0) {
        HyperParams hp;
        hp.learning_rate = schedule.finetune_lr;
        hp.batch_frames = schedule.batch_frames;
        hp.steps = schedule.finetune_steps;
        train_sgd(candidate, prepared, hp, rng);
      }
      const double quality = mean_sisdr_improvement(candidate, eval_scenes, stft_cfg);

      PruneStep step;
      step.pass = pass;
      step.layer = layer;
      step.removed = k;
      step.macs_before = count_macs(result.net);
      step.macs_after = count_macs(candidate);
      step.quality_db = quality;
      step.kept = quality >= schedule.quality_floor_db;
      result.report.steps.push_back(step);

      if (!step.kept) {
        result.report.floor_violated_at_first_step = first_step;
        result.report.macs_final = count_macs(result.net);
        result.report.quality_final =
            mean_sisdr_improvement(result.net, eval_scenes, stft_cfg);
        return result;
      }
      result.net = std::move(candidate);
      result.report.quality_final = quality;
      first_step = false;
    }
  }
  result.report.macs_final = count_macs(result.net);
  return result;
}

inline void write_prune_csv(const std::string& path, const PruneReport& report) {
  CsvWriter csv(path);
  csv.row({"pass", "layer", "channels_removed", "macs_before", "macs_after", "quality_db",
           "kept"});
  for (const PruneStep& s : report.steps) {
    csv.row({std::to_string(s.pass), s.layer, std::to_string(s.removed),
             std::to_string(s.macs_before), std::to_string(s.macs_after),
             format_double(s.quality_db), s.kept ? "1" : "0"});
  }
  csv.row({"total", "", "", std::to_string(report.macs_initial),
           std::to_string(report.macs_final), format_double(report.quality_final), ""});
}

}  // namespace adnz

#endif  // ADNZ_PRUNE_HPP_
