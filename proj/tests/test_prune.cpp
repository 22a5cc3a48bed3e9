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

#include "adnz/prune.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "adnz/network.hpp"
#include "doctest.h"

using namespace adnz;

namespace {

Genome skipped_genome(BottleneckKind kind) {
  Genome g;
  g.levels = {{8, 3, 2, true}, {6, 3, 2, true}};
  g.bottleneck = kind;
  g.hidden = 12;
  g.activation = Activation::kRelu;
  return g;
}

std::vector<std::vector<std::complex<double>>> random_frames(int n_frames, int n_bins,
                                                             std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<std::complex<double>>> frames(static_cast<std::size_t>(n_frames));
  for (auto& f : frames) {
    f.resize(static_cast<std::size_t>(n_bins));
    for (auto& v : f) v = {0.1 * rng.gaussian(), 0.1 * rng.gaussian()};
  }
  return frames;
}

// max |a-b| over mask frames produced on a shared input stream
double max_output_delta(const NetworkInstance& a, const NetworkInstance& b, std::uint64_t seed) {
  NetRunner<double> ra(a), rb(b);
  const auto frames = random_frames(5, kNetworkBins + 1, seed);
  double worst = 0.0;
  for (const auto& f : frames) {
    const MaskFrame ma = ra.step(f.data(), kNetworkBins + 1);
    const MaskFrame mb = rb.step(f.data(), kNetworkBins + 1);
    for (std::size_t i = 0; i < ma.m.size(); ++i) {
      worst = std::max(worst, std::abs(ma.m[i] - mb.m[i]));
    }
  }
  return worst;
}

void zero_enc_channel(NetworkInstance& net, int level, int channel) {
  Tensor<double>& w = net.weight("enc" + std::to_string(level) + ".w");
  const std::size_t slice = w.shape[1] * w.shape[2];
  for (std::size_t i = 0; i < slice; ++i) {
    w.data[static_cast<std::size_t>(channel) * slice + i] = 0.0;
  }
  net.weight("enc" + std::to_string(level) + ".b").data[static_cast<std::size_t>(channel)] = 0.0;
}

SceneConfig scene_cfg() {
  SceneConfig cfg;
  cfg.duration_s = 1.0;
  cfg.snr_min_db = cfg.snr_max_db = 0.0;
  return cfg;
}

}  // namespace

TEST_SUITE("prune") {

TEST_CASE("k = 0 is the identity in structure, weights and MACs") {
  Rng rng(1);
  const NetworkInstance net = build_network(skipped_genome(BottleneckKind::kGru), rng);
  const NetworkInstance same = prune_channels(net, "enc0", 0);
  CHECK(count_macs(same) == count_macs(net));
  CHECK(max_output_delta(net, same, 3) == 0.0);
}

TEST_CASE("macs strictly decrease for k >= 1 on every prunable layer") {
  for (BottleneckKind kind :
       {BottleneckKind::kGru, BottleneckKind::kLstm, BottleneckKind::kConv}) {
    CAPTURE(to_string(kind));
    Rng rng(2);
    const NetworkInstance net = build_network(skipped_genome(kind), rng);
    for (const std::string& layer : prunable_layers(net.topo)) {
      CAPTURE(layer);
      const NetworkInstance pruned = prune_channels(net, layer, 1);
      CHECK(count_macs(pruned) < count_macs(net));
      // structural integrity: the pruned net still streams
      NetRunner<double> runner(pruned);
      const auto frames = random_frames(1, kNetworkBins + 1, 9);
      const MaskFrame mask = runner.step(frames[0].data(), kNetworkBins + 1);
      for (const auto& v : mask.m) CHECK(std::isfinite(v.real()));
    }
  }
}

TEST_CASE("removing an all-zero channel leaves the function unchanged") {
  SUBCASE("encoder channel feeding the next conv") {
    Rng rng(4);
    NetworkInstance net = build_network(skipped_genome(BottleneckKind::kGru), rng);
    zero_enc_channel(net, 0, 3);
    const NetworkInstance pruned = prune_channels(net, "enc0", 1);
    CHECK(pruned.topo.enc[0].c_out == net.topo.enc[0].c_out - 1);
    CHECK(max_output_delta(net, pruned, 11) <= 1e-6);
  }
  SUBCASE("last encoder channel feeding bottleneck and skip consumer") {
    // Removing a channel of the last encoder level also removes the mirrored
    // bottleneck output slice, so exact equivalence additionally needs that
    // slice's producers zeroed.
    for (BottleneckKind kind :
         {BottleneckKind::kGru, BottleneckKind::kLstm, BottleneckKind::kConv}) {
      CAPTURE(to_string(kind));
      Rng rng(5);
      NetworkInstance net = build_network(skipped_genome(kind), rng);
      const int channel = 2;
      zero_enc_channel(net, 1, channel);
      const int w_last = net.topo.width_at(net.topo.n_levels());
      if (kind == BottleneckKind::kConv) {
        Tensor<double>& w2 = net.weight("bn.conv2.w");
        const std::size_t slice = w2.shape[1] * w2.shape[2];
        for (std::size_t i = 0; i < slice; ++i) {
          w2.data[static_cast<std::size_t>(channel) * slice + i] = 0.0;
        }
        net.weight("bn.conv2.b").data[static_cast<std::size_t>(channel)] = 0.0;
      } else {
        Tensor<double>& proj = net.weight("bn.proj.w");
        Tensor<double>& proj_b = net.weight("bn.proj.b");
        for (int j = 0; j < w_last; ++j) {
          const std::size_t row = static_cast<std::size_t>(channel * w_last + j);
          for (std::size_t c = 0; c < proj.shape[1]; ++c) proj.at(row, c) = 0.0;
          proj_b.data[row] = 0.0;
        }
      }
      const NetworkInstance pruned = prune_channels(net, "enc1", 1);
      CHECK(max_output_delta(net, pruned, 12) <= 1e-6);
    }
  }
  SUBCASE("decoder channel feeding the head") {
    Rng rng(6);
    NetworkInstance net = build_network(skipped_genome(BottleneckKind::kConv), rng);
    Tensor<double>& w = net.weight("dec0.w");  // [Cin, Cout, K]
    const std::size_t c_out = w.shape[1], k = w.shape[2];
    for (std::size_t ci = 0; ci < w.shape[0]; ++ci) {
      for (std::size_t kk = 0; kk < k; ++kk) w.data[(ci * c_out + 1) * k + kk] = 0.0;
    }
    net.weight("dec0.b").data[1] = 0.0;
    const NetworkInstance pruned = prune_channels(net, "dec0", 1);
    CHECK(max_output_delta(net, pruned, 13) <= 1e-6);
  }
  SUBCASE("recurrent hidden unit across all gates") {
    Rng rng(7);
    NetworkInstance net = build_network(skipped_genome(BottleneckKind::kGru), rng);
    for (const std::string gate : {"z", "r", "n"}) {
      Tensor<double>& w = net.weight("bn.w" + gate);
      for (std::size_t c = 0; c < w.shape[1]; ++c) w.at(2, c) = 0.0;
      Tensor<double>& u = net.weight("bn.u" + gate);
      for (std::size_t c = 0; c < u.shape[1]; ++c) u.at(2, c) = 0.0;
      net.weight("bn.b" + gate).data[2] = 0.0;
    }
    const NetworkInstance pruned = prune_channels(net, "bn", 1);
    CHECK(pruned.topo.hidden == net.topo.hidden - 1);
    CHECK(max_output_delta(net, pruned, 14) <= 1e-6);
  }
}

TEST_CASE("protected and out-of-range prunes are rejected") {
  Rng rng(8);
  const NetworkInstance net = build_network(skipped_genome(BottleneckKind::kConv), rng);
  CHECK_THROWS(prune_channels(net, "head", 1));
  CHECK_THROWS(prune_channels(net, "enc0", net.topo.enc[0].c_out));  // would leave 0
  CHECK_THROWS(prune_channels(net, "enc7", 1));
}

TEST_CASE("prune_loop walks layers output-to-input and keeps MACs monotone") {
  Rng rng(9);
  NetworkInstance net = build_network(skipped_genome(BottleneckKind::kGru), rng);
  const std::vector<Mixture> scenes = synth_scenes(scene_cfg(), 2, 91);

  PruneSchedule schedule;
  schedule.fraction_per_step = 0.25;
  schedule.finetune_steps = 0;
  schedule.passes = 2;
  Rng loop_rng(10);
  const PruneLoopResult result = prune_loop(net, schedule, scenes, scenes, loop_rng);

  REQUIRE(!result.report.steps.empty());
  const auto order = prunable_layers(net.topo);
  for (std::size_t i = 0; i < result.report.steps.size(); ++i) {
    CHECK(result.report.steps[i].layer == order[i % order.size()]);
    CHECK(result.report.steps[i].macs_after <= result.report.steps[i].macs_before);
    if (i > 0) {
      CHECK(result.report.steps[i].macs_before == result.report.steps[i - 1].macs_after);
    }
  }
  CHECK(result.report.macs_final < result.report.macs_initial);

  // pruned net still satisfies streaming/offline equivalence
  const auto frames = random_frames(4, kNetworkBins + 1, 15);
  NetRunner<double> runner(result.net);
  Spectrogram spec;
  spec.config = StftConfig{};
  spec.n_bins = kNetworkBins + 1;
  for (const auto& f : frames) spec.data.insert(spec.data.end(), f.begin(), f.end());
  const auto features = normalized_features(spec);
  Tape<double> tape;
  const TapeNet tn = register_network(tape, result.net, false);
  const auto masks = forward_on_tape(tape, tn, features);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const MaskFrame streamed = runner.step(frames[t].data(), kNetworkBins + 1);
    const Tensor<double>& m = tape.value(masks[t]);
    for (int b = 0; b < kNetworkBins; ++b) {
      CHECK(std::abs(m.at(0, static_cast<std::size_t>(b)) -
                     streamed.m[static_cast<std::size_t>(b)].real()) < 1e-5);
    }
  }
}

TEST_CASE("ceil sizing removes 2 of 32 channels at fraction 0.05") {
  Genome g;
  g.levels = {{32, 3, 2, false}};
  g.bottleneck = BottleneckKind::kConv;
  g.hidden = 8;
  Rng rng(11);
  NetworkInstance net = build_network(g, rng);
  const std::vector<Mixture> scenes = synth_scenes(scene_cfg(), 1, 92);
  PruneSchedule schedule;
  schedule.fraction_per_step = 0.05;
  schedule.finetune_steps = 0;
  schedule.passes = 1;
  Rng loop_rng(12);
  const PruneLoopResult result = prune_loop(net, schedule, scenes, scenes, loop_rng);
  for (const PruneStep& step : result.report.steps) {
    if (step.layer == "enc0") CHECK(step.removed == 2);  // ceil(0.05 * 32)
  }
}

TEST_CASE("an unreachable quality floor returns the original network") {
  Rng rng(13);
  NetworkInstance net = build_network(skipped_genome(BottleneckKind::kConv), rng);
  const std::vector<Mixture> scenes = synth_scenes(scene_cfg(), 2, 93);
  PruneSchedule schedule;
  schedule.fraction_per_step = 0.1;
  schedule.finetune_steps = 0;
  schedule.passes = 1;
  schedule.quality_floor_db = 100.0;  // impossible
  Rng loop_rng(14);
  const PruneLoopResult result = prune_loop(net, schedule, scenes, scenes, loop_rng);
  CHECK(result.report.floor_violated_at_first_step);
  CHECK(result.report.macs_final == result.report.macs_initial);
  CHECK(count_macs(result.net) == count_macs(net));
  CHECK(max_output_delta(net, result.net, 17) == 0.0);
}

TEST_CASE("fine-tuning recovers at least as much quality as none") {
  // ablation oracle over 3 seeds: same MAC reduction, with/without fine-tune
  const std::vector<Mixture> scenes = synth_scenes(scene_cfg(), 3, 94);
  std::vector<double> with_ft, without_ft;
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    Genome g;
    g.levels = {{8, 3, 2, true}};
    g.bottleneck = BottleneckKind::kConv;
    g.hidden = 12;
    Rng rng(seed);
    NetworkInstance net = build_network(g, rng);
    HyperParams hp;
    hp.learning_rate = 0.002;
    hp.batch_frames = 12;
    hp.steps = 200;
    Rng train_rng(seed + 10);
    train_sgd(net, scenes, hp, train_rng);

    PruneSchedule schedule;
    schedule.fraction_per_step = 0.25;
    schedule.passes = 1;
    schedule.batch_frames = 12;
    schedule.finetune_lr = 0.002;

    schedule.finetune_steps = 150;
    Rng rng_a(seed + 20);
    with_ft.push_back(prune_loop(net, schedule, scenes, scenes, rng_a).report.quality_final);

    schedule.finetune_steps = 0;
    Rng rng_b(seed + 20);
    without_ft.push_back(prune_loop(net, schedule, scenes, scenes, rng_b).report.quality_final);
  }
  std::sort(with_ft.begin(), with_ft.end());
  std::sort(without_ft.begin(), without_ft.end());
  CHECK(with_ft[1] >= without_ft[1]);  // medians over 3 seeds
}

}  // TEST_SUITE
