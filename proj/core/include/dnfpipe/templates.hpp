#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dnfpipe/classifier.hpp"
#include "dnfpipe/config.hpp"

namespace dnfpipe {

struct TemplateParams {
  std::size_t seeds = 8;             // calibration scenes per class
  std::size_t steps = 40;            // steps recorded per calibration scene
  std::uint64_t first_seed = 10007;  // kept apart from episode seeds
  double prob_floor = 2e-3;          // clamp for per-cell spike probabilities
  double weight_clip = 6.0;
  double gain_lo = 0.75;             // dense1 units of one class span [gain_lo, gain_hi]
  double gain_hi = 1.25;
  double dense_vth = 12.0;
  int dense_dv = 102;                // leak time constant of about 40 steps
  double activity_weight = 10.0;
  int activity_du = 2048;            // bias stays on for about 4 steps after the last pooled spike
  double output_vth = 1.0;
  double lateral = -4.0;
};

// Gated-field spikes (active indices per step) with only sockets of class `cls` visible.
std::vector<std::vector<std::uint32_t>> record_gated_responses(const PipelineConfig& cfg, SocketClass cls,
                                                               std::uint64_t seed, std::size_t steps);

// Pool2 view of one gated frame under the template relay layers: two OR-pooled 10x10 maps,
// the second taken one pool1 cell down-right.
std::vector<std::uint8_t> pooled_view(const std::vector<std::uint8_t>& gated, std::size_t side);

// Steps on which the bias neuron fires, replayed from a pooled stream.
std::vector<bool> activity_trace(const std::vector<std::vector<std::uint8_t>>& pooled, double weight, int du);

// Per-class spike probability of each pooled cell while the bias neuron is on.
std::array<std::vector<double>, kNumClasses> pooled_class_probabilities(const PipelineConfig& cfg,
                                                                        const TemplateParams& p = {});

// Relay layers plus a leaky log-likelihood race in dense1, calibrated from the front end.
ClassifierWeights generate_template_weights(const PipelineConfig& cfg, const TemplateParams& p = {});

}  // namespace dnfpipe
