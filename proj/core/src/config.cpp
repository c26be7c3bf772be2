#include "dnfpipe/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <variant>

namespace dnfpipe {

SelectiveDnfParams PipelineConfig::tuned_selective() {
  SelectiveDnfParams p;
  p.kernel.amp_exc = 4.0;
  p.kernel.width_exc = {1.0, 1.0};
  return p;
}

MemoryDnfParams PipelineConfig::tuned_memory() {
  MemoryDnfParams p;
  p.kernel.width_exc = {5.0, 5.0};
  p.kernel.width_inh = {6.0, 6.0};
  return p;
}

ServoParams PipelineConfig::tuned_servo() {
  ServoParams p;
  p.radius = 2.0;
  return p;
}

NsmParams PipelineConfig::tuned_nsm() {
  NsmParams p;
  p.eb2_intention = NeuronParams{4096, 4096, 1.0, 1, 6, 6};
  p.w_eb2_intention_to_servo = 54.0;
  p.w_eb1_cos_self = 4.0;
  p.w_eb2_cos_self = 4.0;
  p.w_eb1_cos_to_eb1_cod = -100.0;
  p.w_eb1_cos_to_memory = -100.0;
  p.w_eb2_intention_to_selective = -4.0;
  return p;
}

namespace {

using Ref = std::variant<int*, double*, bool*, std::string*, std::uint64_t*, SocketClass*,
                         std::array<double, 2>*>;
static_assert(std::is_same_v<std::size_t, std::uint64_t>, "size_t keys are stored through uint64_t");

struct Field {
  std::string key;
  std::function<Ref(PipelineConfig&)> ref;
};

std::vector<Field> registry() {
  std::vector<Field> f;
  auto add = [&](std::string key, std::function<Ref(PipelineConfig&)> r) { f.push_back({std::move(key), std::move(r)}); };
  auto neuron = [&](const std::string& prefix, std::function<NeuronParams&(PipelineConfig&)> np, bool bias,
                    bool refractory) {
    add(prefix + ".du", [np](PipelineConfig& c) -> Ref { return &np(c).du; });
    add(prefix + ".dv", [np](PipelineConfig& c) -> Ref { return &np(c).dv; });
    add(prefix + ".vth", [np](PipelineConfig& c) -> Ref { return &np(c).vth; });
    if (bias) {
      add(prefix + ".bias_mant", [np](PipelineConfig& c) -> Ref { return &np(c).bias_mant; });
      add(prefix + ".bias_exp", [np](PipelineConfig& c) -> Ref { return &np(c).bias_exp; });
    }
    if (refractory)
      add(prefix + ".refractory_delay", [np](PipelineConfig& c) -> Ref { return &np(c).refractory_delay; });
  };
  auto kernel = [&](const std::string& prefix, std::function<KernelDescriptor&(PipelineConfig&)> k) {
    add(prefix + ".amp_exc", [k](PipelineConfig& c) -> Ref { return &k(c).amp_exc; });
    add(prefix + ".width_exc", [k](PipelineConfig& c) -> Ref { return &k(c).width_exc; });
    add(prefix + ".amp_inh", [k](PipelineConfig& c) -> Ref { return &k(c).amp_inh; });
    add(prefix + ".width_inh", [k](PipelineConfig& c) -> Ref { return &k(c).width_inh; });
    add(prefix + ".cutoff", [k](PipelineConfig& c) -> Ref { return &k(c).cutoff_radius; });
  };
#define FIELD(key, expr) add(key, [](PipelineConfig& c) -> Ref { return &(expr); })

  FIELD("neuron.bias_shift", c.bias_shift);
  neuron("selective", [](PipelineConfig& c) -> NeuronParams& { return c.selective.field; }, false, false);
  kernel("selective.kernel", [](PipelineConfig& c) -> KernelDescriptor& { return c.selective.kernel; });
  neuron("inhibitor", [](PipelineConfig& c) -> NeuronParams& { return c.selective.inhibitor; }, false, false);
  neuron("memory", [](PipelineConfig& c) -> NeuronParams& { return c.memory.field; }, false, false);
  kernel("memory.kernel", [](PipelineConfig& c) -> KernelDescriptor& { return c.memory.kernel; });
  neuron("rn.select", [](PipelineConfig& c) -> NeuronParams& { return c.relational.select; }, false, false);
  neuron("rn.gated", [](PipelineConfig& c) -> NeuronParams& { return c.relational.gated; }, false, false);
  FIELD("classifier.conv1_channels", c.classifier_arch.conv1_channels);
  FIELD("classifier.conv2_channels", c.classifier_arch.conv2_channels);
  FIELD("classifier.dense1", c.classifier_arch.dense1);
  FIELD("classifier.weights", c.classifier_weights);
  FIELD("classifier.manifest", c.classifier_manifest);
  neuron("matching", [](PipelineConfig& c) -> NeuronParams& { return c.match.matching; }, false, false);
  neuron("non_matching", [](PipelineConfig& c) -> NeuronParams& { return c.match.non_matching; }, true, false);
  neuron("servo", [](PipelineConfig& c) -> NeuronParams& { return c.servo.outputs; }, false, false);
  FIELD("servo.radius", c.servo.radius);
  neuron("eb1_intention", [](PipelineConfig& c) -> NeuronParams& { return c.nsm.eb1_intention; }, true, false);
  neuron("eb1_cos", [](PipelineConfig& c) -> NeuronParams& { return c.nsm.eb1_cos; }, false, false);
  neuron("eb1_cod", [](PipelineConfig& c) -> NeuronParams& { return c.nsm.eb1_cod; }, false, true);
  neuron("precondition", [](PipelineConfig& c) -> NeuronParams& { return c.nsm.precondition; }, true, false);
  neuron("eb2_intention", [](PipelineConfig& c) -> NeuronParams& { return c.nsm.eb2_intention; }, true, false);
  neuron("eb2_cos", [](PipelineConfig& c) -> NeuronParams& { return c.nsm.eb2_cos; }, false, false);

  FIELD("weight.input_to_selective", c.w_input_to_selective);
  FIELD("weight.selective_to_inhibitor", c.selective.w_field_to_inhibitor);
  FIELD("weight.inhibitor_to_selective", c.selective.w_inhibitor_to_field);
  FIELD("weight.selective_to_memory", c.memory.w_selective_to_memory);
  FIELD("weight.memory_to_selective", c.memory.w_memory_to_selective);
  FIELD("weight.input_to_select", c.relational.w_input_to_select);
  FIELD("weight.selective_to_select", c.relational.w_dnf_to_select);
  FIELD("weight.select_to_gated", c.relational.w_select_to_gated);
  FIELD("weight.gated_to_classifier", c.w_gated_to_classifier);
  FIELD("weight.user_to_matching", c.match.w_user_to_matching);
  FIELD("weight.user_to_non_matching", c.match.w_user_to_non_matching);
  FIELD("weight.classifier_to_circuits", c.match.w_classifier_to_circuits);
  FIELD("weight.matching_to_eb1_cos", c.nsm.w_matching_to_eb1_cos);
  FIELD("weight.non_matching_to_eb1_cod", c.nsm.w_non_matching_to_eb1_cod);
  FIELD("weight.eb1_intention_to_eb1_cos", c.nsm.w_eb1_intention_to_eb1_cos);
  FIELD("weight.eb1_intention_to_selective", c.nsm.w_eb1_intention_to_selective);
  FIELD("weight.eb1_cos_to_eb1_intention", c.nsm.w_eb1_cos_to_eb1_intention);
  FIELD("weight.eb1_cod_to_selective", c.nsm.w_eb1_cod_to_selective);
  FIELD("weight.eb1_cos_to_precondition", c.nsm.w_eb1_cos_to_precondition);
  FIELD("weight.precondition_to_eb2_intention", c.nsm.w_precondition_to_eb2_intention);
  FIELD("weight.eb2_intention_to_servo", c.nsm.w_eb2_intention_to_servo);
  FIELD("weight.eb2_intention_to_eb2_cos", c.nsm.w_eb2_intention_to_eb2_cos);
  FIELD("weight.eb2_cos_to_eb2_intention", c.nsm.w_eb2_cos_to_eb2_intention);
  FIELD("weight.selective_to_servo", c.servo.w_field);
  FIELD("weight.eb1_cos_self", c.nsm.w_eb1_cos_self);
  FIELD("weight.eb2_cos_self", c.nsm.w_eb2_cos_self);
  FIELD("weight.eb1_cos_to_eb1_cod", c.nsm.w_eb1_cos_to_eb1_cod);
  FIELD("weight.eb1_cos_to_memory", c.nsm.w_eb1_cos_to_memory);
  FIELD("weight.eb2_intention_to_selective", c.nsm.w_eb2_intention_to_selective);
  FIELD("weight.contact_to_eb2_cos", c.nsm.w_contact_to_eb2_cos);

  FIELD("scene.socket.q0", c.socket_by_quadrant[0]);
  FIELD("scene.socket.q1", c.socket_by_quadrant[1]);
  FIELD("scene.socket.q2", c.socket_by_quadrant[2]);
  FIELD("scene.socket.q3", c.socket_by_quadrant[3]);
  FIELD("scene.density.usb", c.density_by_class[0]);
  FIELD("scene.density.ethernet", c.density_by_class[1]);
  FIELD("scene.density.hdmi", c.density_by_class[2]);
  FIELD("scene.density.power", c.density_by_class[3]);
  FIELD("scene.tremor_amp_px", c.tremor_amp_px);
  FIELD("scene.tremor_hz", c.tremor_hz);
  FIELD("scene.contour_rate", c.contour_rate);
  FIELD("scene.noise_rate", c.noise_rate);
  FIELD("input.injection_gain", c.injection_gain);
  FIELD("input.frame_hold", c.frame_hold);

  FIELD("plant.step_size", c.step_size);
  FIELD("plant.z0", c.z0);
  FIELD("plant.board_plane_z", c.board_plane_z);
  FIELD("plant.descent_xy_shift", c.descent_xy_shift);
  FIELD("plant.control_period", c.control_period);

  FIELD("run.target", c.target);
  FIELD("run.seed", c.seed);
  FIELD("run.max_steps", c.max_steps);
  FIELD("run.force_classification", c.force_classification);
  FIELD("analysis.peak_window", c.peak_window);
  FIELD("analysis.peak_min_size", c.peak_min_size);
  FIELD("analysis.state_window", c.state_window);
  FIELD("probe.populations", c.probe_populations);
  FIELD("probe.voltages", c.probe_voltages);
#undef FIELD
  return f;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

template <typename I>
I parse_int(const std::string& key, const std::string& v) {
  I x{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

std::string format(double x) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

void assign(const std::string& key, Ref r, const std::string& v) {
  std::visit(
      [&](auto* ptr) {
        using T = std::remove_pointer_t<decltype(ptr)>;
        if constexpr (std::is_same_v<T, double>) {
          *ptr = parse_double(key, v);
        } else if constexpr (std::is_same_v<T, int>) {
          *ptr = parse_int<int>(key, v);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          *ptr = parse_int<std::uint64_t>(key, v);
        } else if constexpr (std::is_same_v<T, bool>) {
          if (v == "true" || v == "1") *ptr = true;
          else if (v == "false" || v == "0") *ptr = false;
          else throw ConfigError(key + ": expected true/false, got '" + v + "'");
        } else if constexpr (std::is_same_v<T, std::string>) {
          *ptr = v;
        } else if constexpr (std::is_same_v<T, SocketClass>) {
          try {
            *ptr = socket_class_from_string(v);
          } catch (const ContractError&) {
            throw ConfigError(key + ": unknown socket class '" + v + "'");
          }
        } else {
          const auto comma = v.find(',');
          if (comma == std::string::npos) throw ConfigError(key + ": expected 'a,b', got '" + v + "'");
          (*ptr)[0] = parse_double(key, trim(v.substr(0, comma)));
          (*ptr)[1] = parse_double(key, trim(v.substr(comma + 1)));
        }
      },
      r);
}

std::string render(Ref r) {
  return std::visit(
      [](auto* ptr) -> std::string {
        using T = std::remove_pointer_t<decltype(ptr)>;
        if constexpr (std::is_same_v<T, double>) return format(*ptr);
        else if constexpr (std::is_same_v<T, bool>) return *ptr ? "true" : "false";
        else if constexpr (std::is_same_v<T, std::string>) return *ptr;
        else if constexpr (std::is_same_v<T, SocketClass>) return to_string(*ptr);
        else if constexpr (std::is_same_v<T, std::array<double, 2>>) return format((*ptr)[0]) + "," + format((*ptr)[1]);
        else return std::to_string(*ptr);
      },
      r);
}

}  // namespace

void PipelineConfig::validate() const {
  auto check_neuron = [](const std::string& key, const NeuronParams& p) {
    try {
      p.validate();
    } catch (const ContractError& e) {
      throw ConfigError(key + ": " + e.what());
    }
  };
  check_neuron("selective", selective.field);
  check_neuron("inhibitor", selective.inhibitor);
  check_neuron("memory", memory.field);
  check_neuron("rn.select", relational.select);
  check_neuron("rn.gated", relational.gated);
  check_neuron("matching", match.matching);
  check_neuron("non_matching", match.non_matching);
  check_neuron("servo", servo.outputs);
  check_neuron("eb1_intention", nsm.eb1_intention);
  check_neuron("eb1_cos", nsm.eb1_cos);
  check_neuron("eb1_cod", nsm.eb1_cod);
  check_neuron("precondition", nsm.precondition);
  check_neuron("eb2_intention", nsm.eb2_intention);
  check_neuron("eb2_cos", nsm.eb2_cos);
  try {
    selective.kernel.validate();
  } catch (const ContractError& e) {
    throw ConfigError(std::string("selective.kernel: ") + e.what());
  }
  try {
    memory.kernel.validate();
  } catch (const ContractError& e) {
    throw ConfigError(std::string("memory.kernel: ") + e.what());
  }
  try {
    classifier_arch.validate();
  } catch (const ContractError& e) {
    throw ConfigError(std::string("classifier: ") + e.what());
  }
  std::set<SocketClass> seen(socket_by_quadrant.begin(), socket_by_quadrant.end());
  for (std::size_t k = 0; k < kNumClasses; ++k)
    if (density_by_class[k] < 0.0 || density_by_class[k] > 1.0)
      throw ConfigError("scene.density: values must lie in [0,1]");
  if (bias_shift < 0 || bias_shift > 30) throw ConfigError("neuron.bias_shift: must lie in [0,30]");
  if (servo.radius < 0.0) throw ConfigError("servo.radius: must be >= 0");
  if (tremor_amp_px < 0.0) throw ConfigError("scene.tremor_amp_px: must be >= 0");
  if (tremor_hz <= 0.0) throw ConfigError("scene.tremor_hz: must be > 0");
  if (contour_rate < 0.0) throw ConfigError("scene.contour_rate: must be >= 0");
  if (noise_rate < 0.0 || noise_rate > 1.0) throw ConfigError("scene.noise_rate: must lie in [0,1]");
  if (injection_gain < 0.0) throw ConfigError("input.injection_gain: must be >= 0");
  if (frame_hold < 1) throw ConfigError("input.frame_hold: must be >= 1");
  if (step_size <= 0.0) throw ConfigError("plant.step_size: must be > 0");
  if (z0 < 0.0) throw ConfigError("plant.z0: must be >= 0");
  if (control_period < 1) throw ConfigError("plant.control_period: must be >= 1");
  if (max_steps < 0) throw ConfigError("run.max_steps: must be >= 0");
  if (peak_window < 1) throw ConfigError("analysis.peak_window: must be >= 1");
  if (peak_min_size < 1) throw ConfigError("analysis.peak_min_size: must be >= 1");
  if (state_window < 3) throw ConfigError("analysis.state_window: must be >= 3");
  if (!classifier_weights.empty() && classifier_manifest.empty())
    throw ConfigError("classifier.manifest: required when classifier.weights is set");
}

PipelineConfig parse_config(const std::string& text, PipelineConfig base, bool require_all) {
  const auto fields = registry();
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return f.key == key; });
    if (it == fields.end()) throw ConfigError("unknown key '" + key + "' on line " + std::to_string(lineno));
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "' on line " + std::to_string(lineno));
    assign(key, it->ref(base), value);
  }
  if (require_all)
    for (const auto& f : fields)
      if (!seen.count(f.key)) throw ConfigError("missing key '" + f.key + "'");
  base.validate();
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), {}, true);
}

std::string dump_config(const PipelineConfig& cfg) {
  PipelineConfig copy = cfg;
  std::ostringstream out;
  for (const auto& f : registry()) out << f.key << " = " << render(f.ref(copy)) << '\n';
  return out.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : registry()) keys.push_back(f.key);
  return keys;
}

}  // namespace dnfpipe
