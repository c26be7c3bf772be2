#include "dnfpipe/templates.hpp"

#include <algorithm>
#include <cmath>

#include "dnfpipe/pipeline.hpp"

namespace dnfpipe {

std::vector<std::vector<std::uint32_t>> record_gated_responses(const PipelineConfig& cfg_in, SocketClass cls,
                                                               std::uint64_t seed, std::size_t steps) {
  PipelineConfig cfg = apply_bias_shift(cfg_in);
  cfg.seed = seed;
  // Rotate the layout with the seed so every class is seen in several quadrants.
  for (std::size_t q = 0; q < 4; ++q)
    cfg.socket_by_quadrant[q] = static_cast<SocketClass>((q + seed) % kNumClasses);
  for (std::size_t k = 0; k < kNumClasses; ++k)
    if (k != static_cast<std::size_t>(cls)) cfg.density_by_class[k] = 0.0;
  const SceneSpec scene = make_scene(cfg);

  Network net;
  const Shape field = cfg.selective.shape;
  const PopId input = net.add_population("input", source_population(field));
  const SelectiveDnf sel = build_selective_dnf(net, cfg.selective);
  net.add_projection(Projection{"input->selective", input, sel.field, 1,
                                SparseWeights::one_to_one(field.size(), cfg.w_input_to_selective)});
  build_memory_dnf(net, sel, cfg.memory);
  const RelationalNetwork rn = build_relational_network(net, input, sel, cfg.relational);

  PlantState pose;
  pose.z = cfg.z0;
  Rng rng({seed, 0x1a9e7ULL});
  std::vector<double> drive;
  std::vector<std::vector<std::uint32_t>> out;
  const auto hold = static_cast<std::uint64_t>(cfg.frame_hold);
  for (std::uint64_t t = 0; t < steps; ++t) {
    if (t % hold == 0) drive = injection_probability(render_events(scene, pose, t / hold), cfg.injection_gain);
    for (std::size_t i = 0; i < drive.size(); ++i)
      if (drive[i] > 0.0 && rng.bernoulli(drive[i])) net.inject_at(input, i, 1.0);
    net.step();
    const auto a = net.active(rn.gated_field);
    out.emplace_back(a.begin(), a.end());
  }
  return out;
}

std::vector<std::uint8_t> pooled_view(const std::vector<std::uint8_t>& g, std::size_t side) {
  if (g.size() != side * side || side % 4) throw ContractError("pooled_view: map size mismatch");
  auto or_pool = [](const std::vector<std::uint8_t>& m, std::size_t n) {
    const std::size_t h = n / 2;
    std::vector<std::uint8_t> out(h * h, 0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        if (m[r * n + c]) out[(r / 2) * h + c / 2] = 1;
    return out;
  };
  const std::size_t s1 = side / 2;
  const auto p1 = or_pool(g, side);
  std::vector<std::uint8_t> shifted(s1 * s1, 0);
  for (std::size_t r = 0; r + 1 < s1; ++r)
    for (std::size_t c = 0; c + 1 < s1; ++c) shifted[r * s1 + c] = p1[(r + 1) * s1 + c + 1];
  auto out = or_pool(p1, s1);
  const auto b = or_pool(shifted, s1);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<bool> activity_trace(const std::vector<std::vector<std::uint8_t>>& pooled, double weight, int du) {
  std::vector<bool> on;
  on.reserve(pooled.size());
  double u = 0.0;
  for (const auto& x : pooled) {
    u = u * (1.0 - du / 4096.0) + weight * static_cast<double>(std::count(x.begin(), x.end(), 1));
    on.push_back(u >= 1.0);
  }
  return on;
}

std::array<std::vector<double>, kNumClasses> pooled_class_probabilities(const PipelineConfig& cfg,
                                                                        const TemplateParams& p) {
  const std::size_t side = cfg.classifier_arch.input_side;
  std::array<std::vector<double>, kNumClasses> q;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    std::vector<double> sum;
    std::size_t n = 0;
    for (std::size_t s = 0; s < p.seeds; ++s) {
      const auto stream = record_gated_responses(cfg, static_cast<SocketClass>(k), p.first_seed + s, p.steps);
      std::vector<std::vector<std::uint8_t>> pooled;
      for (const auto& active : stream) {
        std::vector<std::uint8_t> frame(side * side, 0);
        for (auto i : active) frame[i] = 1;
        pooled.push_back(pooled_view(frame, side));
      }
      const auto on = activity_trace(pooled, p.activity_weight, p.activity_du);
      if (sum.empty()) sum.assign(pooled.front().size(), 0.0);
      for (std::size_t t = 0; t < pooled.size(); ++t) {
        if (!on[t]) continue;
        ++n;
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += pooled[t][i];
      }
    }
    for (auto& x : sum) x = std::clamp(n ? x / static_cast<double>(n) : 0.0, p.prob_floor, 1.0 - p.prob_floor);
    q[k] = std::move(sum);
  }
  return q;
}

ClassifierWeights generate_template_weights(const PipelineConfig& cfg, const TemplateParams& p) {
  const ClassifierArch& arch = cfg.classifier_arch;
  arch.validate();
  if (arch.conv2_channels < 2) throw ContractError("template weights need at least 2 conv2 channels");
  if (arch.dense1 < kNumClasses) throw ContractError("template weights need dense1 >= 4");
  ClassifierWeights w;
  w.arch = arch;
  const std::size_t s2 = arch.pool2_side(), c1 = arch.conv1_channels, c2 = arch.conv2_channels;
  auto tensor = [&](const char* name, std::vector<std::size_t> shape) -> Tensor& {
    Tensor t;
    t.name = name;
    t.shape = std::move(shape);
    t.data.assign(t.numel(), 0.0);
    w.layers.push_back(std::move(t));
    return w.layers.back();
  };
  tensor("conv1", {c1, 1, 5, 5}).data[2 * 5 + 2] = 1.0;
  tensor("pool1", {1}).data[0] = 1.0;
  {
    auto& k = tensor("conv2", {c2, c1, 3, 3});
    k.data[(0 * c1 + 0) * 9 + 1 * 3 + 1] = 1.0;  // channel 0: identity
    k.data[(1 * c1 + 0) * 9 + 2 * 3 + 2] = 1.0;  // channel 1: one cell down-right
  }
  tensor("pool2", {1}).data[0] = 1.0;

  // Bernoulli log-likelihood per step: sum_i x_i*logit(q_ki) + sum_i log(1-q_ki), centred over classes.
  const auto q = pooled_class_probabilities(cfg, p);
  const std::size_t cells = q[0].size();
  const std::size_t in = c2 * s2 * s2;
  std::array<std::vector<double>, kNumClasses> weight;
  std::array<double, kNumClasses> bias{};
  std::vector<double> mean_logit(cells, 0.0);
  double mean_absent = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    for (std::size_t i = 0; i < cells; ++i) {
      mean_logit[i] += std::log(q[k][i] / (1.0 - q[k][i])) / kNumClasses;
      bias[k] += std::log(1.0 - q[k][i]);
    }
    mean_absent += bias[k] / kNumClasses;
  }
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    weight[k].assign(in, 0.0);
    for (std::size_t i = 0; i < cells; ++i)
      weight[k][i] = std::clamp(std::log(q[k][i] / (1.0 - q[k][i])) - mean_logit[i], -p.weight_clip, p.weight_clip);
    bias[k] -= mean_absent;
  }

  auto& d1 = tensor("dense1", {arch.dense1, in});
  auto& d2 = tensor("dense2", {kNumClasses, arch.dense1});
  const std::size_t per_class = arch.dense1 / kNumClasses;
  std::vector<double> unit_bias(arch.dense1, 0.0);
  for (std::size_t k = 0; k < kNumClasses; ++k)
    for (std::size_t j = 0; j < per_class; ++j) {
      const double g = per_class > 1 ? p.gain_lo + (p.gain_hi - p.gain_lo) * static_cast<double>(j) /
                                                       static_cast<double>(per_class - 1)
                                     : 1.0;
      const std::size_t u = k * per_class + j;
      for (std::size_t i = 0; i < in; ++i) d1.data[u * in + i] = g * weight[k][i];
      unit_bias[u] = g * bias[k];
      d2.data[k * arch.dense1 + u] = 1.0;
    }
  auto& lat = tensor("lateral", {kNumClasses, kNumClasses});
  for (std::size_t a = 0; a < kNumClasses; ++a)
    for (std::size_t b = 0; b < kNumClasses; ++b)
      if (a != b) lat.data[a * kNumClasses + b] = p.lateral;
  tensor("activity", {1}).data[0] = p.activity_weight;
  tensor("dense1_bias", {arch.dense1}).data = unit_bias;

  const LayerNeuron relay{NeuronModel::LIF_RESET, NeuronParams{4096, 4096, 1.0}};
  w.neurons = {relay,
               relay,
               relay,
               relay,
               LayerNeuron{NeuronModel::LIF, NeuronParams{4096, p.dense_dv, p.dense_vth}},
               LayerNeuron{NeuronModel::LIF_RESET, NeuronParams{4096, 4096, p.output_vth}},
               LayerNeuron{NeuronModel::LIF, NeuronParams{p.activity_du, 4096, 1.0}}};
  w.input_gain = 1.0;
  w.validate();
  return w;
}

}  // namespace dnfpipe
