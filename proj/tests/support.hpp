#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dnfpipe/config.hpp"
#include "dnfpipe/dnf.hpp"
#include "dnfpipe/neuron.hpp"
#include "dnfpipe/pipeline.hpp"
#include "dnfpipe/rng.hpp"
#include "dnfpipe/topology.hpp"

namespace dnfpipe::testing {

// Scalar re-evaluation of the current/voltage recurrence, written from the update rule alone.
struct ScalarNeuron {
  NeuronModel model = NeuronModel::LIF;
  int du = 4096, dv = 4096;
  double vth = 1.0;
  double b = 0.0;
  int delay = 0;
  double u = 0.0, v = 0.0;
  int rc = 0;

  ScalarNeuron(NeuronModel m, const NeuronParams& p)
      : model(m), du(p.du), dv(p.dv), vth(p.vth),
        b(static_cast<double>(p.bias_mant) * std::pow(2.0, p.bias_exp - p.bias_shift)),
        delay(p.refractory_delay) {}

  bool step(double a) {
    u = u * (1.0 - du / 4096.0) + a;
    bool spike = false;
    if (model == NeuronModel::LIF_REFRACTORY && rc > 0) {
      v = 0.0;
      rc -= 1;
    } else if (v >= vth) {
      v = 0.0;
    } else {
      v = v * (1.0 - dv / 4096.0) + u + b;
      if (v >= vth) {
        spike = true;
        v = 0.0;
        if (model == NeuronModel::LIF_REFRACTORY) rc = delay;
      }
    }
    // Reset neurons keep no state across steps.
    if (model == NeuronModel::LIF_RESET) u = v = 0.0;
    return spike;
  }
};

// Per-neuron injection probability: p inside discs of the given radius, zero elsewhere.
inline std::vector<double> disc_map(Shape s, const std::vector<std::pair<double, double>>& centres, double radius,
                                    double p) {
  std::vector<double> m(s.size(), 0.0);
  for (std::size_t r = 0; r < s.rows; ++r)
    for (std::size_t c = 0; c < s.cols; ++c)
      for (const auto& [cr, cc] : centres)
        if (std::hypot(static_cast<double>(r) - cr, static_cast<double>(c) - cc) <= radius) m[r * s.cols + c] = p;
  return m;
}

inline void inject_bernoulli(Network& net, PopId pop, const std::vector<double>& prob, Rng& rng) {
  for (std::size_t i = 0; i < prob.size(); ++i)
    if (prob[i] > 0.0 && rng.bernoulli(prob[i])) net.inject_at(pop, i, 1.0);
}

// Default configuration from the checked-in file, with the global bias shift applied.
inline PipelineConfig default_config() { return apply_bias_shift(load_config(DNFPIPE_DEFAULT_CONFIG)); }

// Input source, selective field with inhibitor, and optionally the memory field.
struct FieldRig {
  Network net;
  PopId input = 0;
  SelectiveDnf sel;
  std::optional<MemoryDnf> mem;

  FieldRig(const PipelineConfig& cfg, bool with_memory) {
    const Shape field = cfg.selective.shape;
    input = net.add_population("input", source_population(field));
    sel = build_selective_dnf(net, cfg.selective);
    net.add_projection(Projection{"input->selective", input, sel.field, 1,
                                  SparseWeights::one_to_one(field.size(), cfg.w_input_to_selective)});
    if (with_memory) mem = build_memory_dnf(net, sel, cfg.memory);
  }

  // Broadcast current onto every selective neuron, as one eb1_cod spike would deliver.
  void inhibit_selective(double w) {
    std::vector<double> cur(net.population(sel.field).size(), w);
    net.inject(sel.field, cur);
  }
};

inline std::size_t count_spikes(std::span<const std::uint8_t> s) {
  std::size_t n = 0;
  for (auto x : s) n += x;
  return n;
}

// Socket name stamped into a peak event's detail ("... socket=USB").
inline std::string detail_socket(const std::string& detail) {
  const auto at = detail.find("socket=");
  return at == std::string::npos ? std::string{} : detail.substr(at + 7);
}

}  // namespace dnfpipe::testing
