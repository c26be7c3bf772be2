#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dnfpipe/topology.hpp"

namespace dnfpipe {

inline constexpr std::size_t kNumClasses = 4;
enum class SocketClass : std::uint8_t { USB = 0, ETHERNET = 1, HDMI = 2, POWER = 3 };
const char* to_string(SocketClass c);
SocketClass socket_class_from_string(const std::string& s);

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> data;  // row-major
  std::size_t numel() const;
};

struct ClassifierArch {
  std::size_t input_side = 40;
  std::size_t conv1_channels = 1;
  std::size_t conv2_channels = 2;
  std::size_t dense1 = 512;
  std::size_t outputs = kNumClasses;

  std::size_t pool1_side() const { return input_side / 2; }
  std::size_t pool2_side() const { return input_side / 4; }
  std::size_t neuron_count() const;
  void validate() const;
};

struct LayerNeuron {
  NeuronModel model = NeuronModel::LIF_RESET;
  NeuronParams params{4096, 4096, 1.0};
};

// Layers: conv1 [C1,1,5,5], pool1 [1], conv2 [C2,C1,3,3], pool2 [1], dense1 [512, C2*s*s],
// dense2 [4,512], lateral [4,4] (output self/lateral recurrence, may be all zero).
// Optional pair: activity [1] (pool2 -> bias neuron) and dense1_bias [512] (bias neuron -> dense1);
// together they give dense1 a per-unit constant drive while the gated field is active.
struct ClassifierWeights {
  ClassifierArch arch;
  std::vector<Tensor> layers;
  std::array<LayerNeuron, 7> neurons{};  // conv1, pool1, conv2, pool2, dense1, output, bias
  double input_gain = 1.0;               // gated field -> conv1 weight scale

  const Tensor& layer(const std::string& name) const;
  Tensor& layer(const std::string& name);
  bool has_layer(const std::string& name) const;
  bool has_bias() const { return has_layer("dense1_bias"); }
  bool loaded() const { return !layers.empty(); }
  // Neurons the classifier adds to a network.
  std::size_t neuron_count() const { return arch.neuron_count() + (has_bias() ? 1 : 0); }
  void validate() const;
};

inline constexpr std::array<const char*, 7> kLayerOrder{"conv1", "pool1", "conv2", "pool2",
                                                        "dense1", "dense2", "lateral"};
inline constexpr std::array<const char*, 2> kOptionalLayers{"activity", "dense1_bias"};
inline constexpr std::array<const char*, 7> kNeuronLayers{"conv1", "pool1", "conv2", "pool2",
                                                          "dense1", "output", "bias"};

// Text container: one "layer <name> <rank> <dims...>" header per tensor followed by values.
void save_weights(const ClassifierWeights& w, const std::filesystem::path& weights,
                  const std::filesystem::path& manifest);
ClassifierWeights load_weights(const std::filesystem::path& weights,
                               const std::filesystem::path& manifest);

struct ClassifierNet {
  PopId conv1 = 0, pool1 = 0, conv2 = 0, pool2 = 0, dense1 = 0, output = 0;
  std::optional<PopId> bias;
  std::vector<ProjId> projections;
};

ClassifierNet build_classifier(Network& net, PopId gated, const ClassifierWeights& w);

// Runs a standalone forward pass; frames beyond the stream are silent.
std::array<std::uint64_t, kNumClasses> classify_forward(
    const ClassifierWeights& w, const std::vector<std::vector<std::uint8_t>>& gated_stream,
    std::size_t window);

// Argmax over counts with ties to the lowest index; -1 if all counts are zero.
int winner(const std::array<std::uint64_t, kNumClasses>& counts);

struct MatchParams {
  NeuronParams matching{4095, 3300, 3.0};
  NeuronParams non_matching{4095, 3300, 3.0, 1, 7, 6};
  double w_user_to_matching = 2.0;
  double w_user_to_non_matching = -2.0;
  double w_classifier_to_circuits = 2.0;
};

struct MatchCircuits {
  PopId matching = 0;
  PopId non_matching = 0;
  PopId user_input = 0;
  std::vector<ProjId> projections;
};

// Registers the user source (4 neurons) and both circuits, fed by `classifier_out`.
MatchCircuits build_match_circuits(Network& net, PopId classifier_out, const MatchParams& p = {});

// One-shot evaluation: classifier and user spikes arrive together, circuits answer one step later.
std::pair<bool, bool> eval_match_circuits(const std::array<bool, kNumClasses>& classifier_spikes,
                                          const std::array<bool, kNumClasses>& user_onehot,
                                          const MatchParams& p = {});

}  // namespace dnfpipe
