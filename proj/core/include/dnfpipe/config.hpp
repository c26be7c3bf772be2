#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dnfpipe/classifier.hpp"
#include "dnfpipe/dnf.hpp"
#include "dnfpipe/nsm.hpp"
#include "dnfpipe/relational.hpp"
#include "dnfpipe/servo.hpp"

namespace dnfpipe {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  int bias_shift = 6;

  SelectiveDnfParams selective = tuned_selective();
  MemoryDnfParams memory = tuned_memory();
  RelationalParams relational{};
  double w_input_to_selective = 8.0;

  ClassifierArch classifier_arch{};
  std::string classifier_weights;  // empty: generate templates from the scene renderer
  std::string classifier_manifest;
  double w_gated_to_classifier = 1.0;

  MatchParams match{};
  ServoParams servo = tuned_servo();
  NsmParams nsm = tuned_nsm();

  // Scene and sensor.
  std::array<SocketClass, 4> socket_by_quadrant{SocketClass::POWER, SocketClass::ETHERNET, SocketClass::HDMI,
                                                SocketClass::USB};
  std::array<double, kNumClasses> density_by_class{0.55, 0.26, 0.45, 0.34};
  double tremor_amp_px = 2.0;
  double tremor_hz = 100.0;
  double contour_rate = 0.25;
  double noise_rate = 0.002;
  double injection_gain = 1.0 / 48.0;
  int frame_hold = 5;

  // Plant.
  double step_size = 1.0;
  double z0 = 16.0;
  double board_plane_z = 0.0;
  double descent_xy_shift = 0.0;
  int control_period = 40;

  // Run.
  SocketClass target = SocketClass::HDMI;
  std::uint64_t seed = 1;
  int max_steps = 3000;
  bool force_classification = false;
  int peak_window = 5;
  int peak_min_size = 4;
  int state_window = 5;
  std::string probe_populations;  // comma-separated population names
  bool probe_voltages = false;

  static SelectiveDnfParams tuned_selective();
  static MemoryDnfParams tuned_memory();
  static ServoParams tuned_servo();
  static NsmParams tuned_nsm();

  void validate() const;  // throws ConfigError naming the offending key
};

// Keys absent from `text` keep their value in `base` unless require_all is set.
PipelineConfig parse_config(const std::string& text, PipelineConfig base = {}, bool require_all = false);
// Every registered key must be present.
PipelineConfig load_config(const std::filesystem::path& path);
// Every key with its current value, in registry order.
std::string dump_config(const PipelineConfig& cfg);
std::vector<std::string> config_keys();

}  // namespace dnfpipe
