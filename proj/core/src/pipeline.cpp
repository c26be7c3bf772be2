#include "dnfpipe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "dnfpipe/templates.hpp"

namespace dnfpipe {

namespace {

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : csv + ",") {
    if (ch == ',') {
      const auto b = cur.find_first_not_of(' ');
      if (b != std::string::npos) out.push_back(cur.substr(b, cur.find_last_not_of(' ') - b + 1));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  return out;
}

bool any_spike(std::span<const std::uint8_t> s) {
  return std::any_of(s.begin(), s.end(), [](std::uint8_t x) { return x != 0; });
}

}  // namespace

// The configured shift replaces every module default so one key scales all biases.
PipelineConfig apply_bias_shift(PipelineConfig c) {
  for (NeuronParams* p : {&c.selective.field, &c.selective.inhibitor, &c.memory.field, &c.relational.select,
                          &c.relational.gated, &c.match.matching, &c.match.non_matching, &c.servo.outputs,
                          &c.nsm.eb1_intention, &c.nsm.eb1_cos, &c.nsm.eb1_cod, &c.nsm.precondition,
                          &c.nsm.eb2_intention, &c.nsm.eb2_cos})
    p->bias_shift = c.bias_shift;
  return c;
}

SceneSpec make_scene(const PipelineConfig& cfg) {
  SceneSpec s = SceneSpec::standard(cfg.socket_by_quadrant, cfg.density_by_class);
  s.tremor_amp_px = cfg.tremor_amp_px;
  s.tremor_hz = cfg.tremor_hz;
  s.contour_rate = cfg.contour_rate;
  s.noise_rate = cfg.noise_rate;
  s.seed = cfg.seed;
  return s;
}

ClassifierWeights classifier_weights_for(const PipelineConfig& cfg) {
  ClassifierWeights w;
  if (!cfg.classifier_weights.empty()) {
    w = load_weights(cfg.classifier_weights, cfg.classifier_manifest);
    if (w.arch.conv1_channels != cfg.classifier_arch.conv1_channels ||
        w.arch.conv2_channels != cfg.classifier_arch.conv2_channels || w.arch.dense1 != cfg.classifier_arch.dense1)
      throw ConfigError("classifier.weights: architecture does not match classifier.* keys");
  } else {
    w = generate_template_weights(cfg);
  }
  return w;
}

PipelineState::PipelineState(const PipelineConfig& cfg_in, const ClassifierWeights& weights)
    : cfg_(apply_bias_shift(cfg_in)),
      motion_(static_cast<std::size_t>(cfg_in.control_period)),
      rng_({cfg_in.seed, 0x1a9e7ULL}),
      monitor_(NsmNodes{}),
      sel_peaks_(cfg_in.selective.shape, static_cast<std::size_t>(cfg_in.peak_window),
                 static_cast<std::size_t>(cfg_in.peak_min_size)),
      mem_peaks_(cfg_in.selective.shape, static_cast<std::size_t>(cfg_in.peak_window),
                 static_cast<std::size_t>(cfg_in.peak_min_size)) {
  cfg_.validate();
  if (cfg_.selective.shape != Shape{kFieldSide, kFieldSide})
    throw ConfigError("selective field must be 80x80 to match the sensor field");

  scene_ = make_scene(cfg_);

  plant_.z = cfg_.z0;
  plant_.step_size = cfg_.step_size;
  plant_.board_plane_z = cfg_.board_plane_z;
  plant_.descent_xy_shift = cfg_.descent_xy_shift;
  plant_.contact = plant_.z <= plant_.board_plane_z;

  const Shape field = cfg_.selective.shape;
  input_ = net_.add_population("input", source_population(field));
  sel_ = build_selective_dnf(net_, cfg_.selective);
  net_.add_projection(Projection{"input->selective", input_, sel_.field, 1,
                                 SparseWeights::one_to_one(field.size(), cfg_.w_input_to_selective)});
  mem_ = build_memory_dnf(net_, sel_, cfg_.memory);
  rn_ = build_relational_network(net_, input_, sel_, cfg_.relational);

  ClassifierWeights w = weights;
  w.input_gain *= cfg_.w_gated_to_classifier;
  cls_ = build_classifier(net_, rn_.gated_field, w);
  match_ = build_match_circuits(net_, cls_.output, cfg_.match);
  servo_ = build_servo(net_, sel_, cfg_.servo);
  nsm_ = build_nsm(net_, sel_, match_, servo_, &mem_, cfg_.nsm);
  monitor_ = NsmMonitor(nsm_);

  for (const auto& name : split_names(cfg_.probe_populations)) {
    if (!net_.has(name)) throw ConfigError("probe.populations: unknown population '" + name + "'");
    probed_.push_back(net_.id(name));
    net_.add_probe(net_.id(name), false);
  }

  const auto [cr, cc] = std::pair{cfg_.memory.kernel.width_inh[0], cfg_.memory.kernel.width_inh[1]};
  mem_footprint_ = 2.0 * std::max(cr, cc);

  report_.seed = cfg_.seed;
  report_.target = to_string(cfg_.target);
  report_.neuron_count = net_.neuron_count();
}

NsmState PipelineState::state() const { return monitor_.state(static_cast<std::size_t>(cfg_.state_window)); }

void PipelineState::set_frames(std::vector<EventFrame> frames) {
  for (const auto& f : frames)
    if (f.counts.size() != kFieldSide * kFieldSide) throw ContractError("replay frame must be 80x80");
  replay_ = std::move(frames);
}

std::pair<double, double> PipelineState::socket_field_position(std::size_t socket) const {
  const auto& s = scene_.sockets.at(socket);
  return project_to_field(s.x, s.y, plant_);
}

std::size_t PipelineState::nearest_socket(double row, double col) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scene_.sockets.size(); ++i) {
    const auto [r, c] = socket_field_position(i);
    const double d = (r - row) * (r - row) + (c - col) * (c - col);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::optional<std::size_t> PipelineState::attended_socket() const {
  const auto s = sel_peaks_.summary();
  if (s.peaks.empty()) return std::nullopt;
  return nearest_socket(s.peaks.front().row, s.peaks.front().col);
}

void PipelineState::log(std::string kind, std::string detail) {
  report_.events.push_back({net_.t() == 0 ? 0 : net_.t() - 1, std::move(kind), std::move(detail)});
}

void PipelineState::snapshot(const std::string& reason) {
  if (!cfg_.probe_voltages) return;
  for (PopId id : probed_) {
    const auto& pop = net_.population(id);
    if (pop.shape().rows < 2) continue;
    VoltageSnapshot s;
    s.population = net_.name(id);
    s.reason = reason;
    s.t = net_.t() - 1;
    s.shape = pop.shape();
    s.vth = pop.params().vth;
    s.v.assign(pop.v().begin(), pop.v().end());
    report_.snapshots.push_back(std::move(s));
  }
}

void PipelineState::inject_inputs() {
  const std::uint64_t t = net_.t();
  const auto hold = static_cast<std::uint64_t>(cfg_.frame_hold);
  if (t % hold == 0) {
    const std::uint64_t k = t / hold;
    EventFrame frame;
    if (replay_) {
      if (k < replay_->size()) frame = (*replay_)[k];
      else frame = EventFrame{k, std::vector<std::uint16_t>(kFieldSide * kFieldSide, 0)};
    } else {
      frame = render_events(scene_, plant_, k);
    }
    frame.t = k;
    drive_ = injection_probability(frame, cfg_.injection_gain);
    if (keep_frames_) used_frames_.push_back(std::move(frame));
  }
  for (std::size_t i = 0; i < drive_.size(); ++i)
    if (drive_[i] > 0.0 && rng_.bernoulli(drive_[i])) net_.inject_at(input_, i, 1.0);

  net_.inject_at(match_.user_input, static_cast<std::size_t>(cfg_.target), 1.0);
  if (plant_.contact) net_.inject_at(nsm_.contact, 0, 1.0);

  if (cfg_.force_classification && t > 0 && any_spike(net_.spikes(rn_.gated_field))) {
    if (const auto sock = attended_socket()) {
      const auto truth = static_cast<std::size_t>(scene_.sockets[*sock].cls);
      const double vth = net_.population(cls_.output).params().vth;
      for (std::size_t k = 0; k < kNumClasses; ++k) net_.inject_at(cls_.output, k, k == truth ? 2.0 * vth : -1000.0);
    }
  }
}

void PipelineState::observe() {
  const std::uint64_t now = net_.t() - 1;
  const auto stamp = [&](std::int64_t& slot) {
    if (slot >= 0) return false;
    slot = static_cast<std::int64_t>(now);
    return true;
  };

  const auto sel = net_.spikes(sel_.field);
  const bool sel_any = any_spike(sel);
  sel_peaks_.push(sel);
  mem_peaks_.push(net_.spikes(mem_.field));
  const auto peaks = sel_peaks_.summary();
  const auto mem = mem_peaks_.summary();

  if (sel_any && stamp(report_.first_dnf_spike)) log("first_dnf_spike");

  const bool active = !peaks.peaks.empty();
  if (active && !peak_active_) {
    const auto& p = peaks.peaks.front();
    const auto sock = nearest_socket(p.row, p.col);
    const std::string where = "row=" + fmt(p.row) + " col=" + fmt(p.col) + " size=" + std::to_string(p.size) +
                              " socket=" + to_string(scene_.sockets[sock].cls);
    log("peak_formed", where);
    if (stamp(report_.peak_formed)) {
      report_.first_attended = to_string(scene_.sockets[sock].cls);
      snapshot("peak_formed");
    }
    if (collapsed_ && report_.second_peak < 0) {
      const bool masked = std::any_of(mem.peaks.begin(), mem.peaks.end(),
                                      [&](const Peak& m) { return within_radius(p, m.row, m.col, mem_footprint_); });
      if (!masked) {
        stamp(report_.second_peak);
        log("second_peak", where);
        snapshot("second_peak");
      }
    }
  }
  peak_active_ = active;

  if (mem.peaks.size() > mem_peak_count_)
    log("memory_stored", "row=" + fmt(mem.peaks.front().row) + " col=" + fmt(mem.peaks.front().col));
  mem_peak_count_ = mem.peaks.size();

  const auto out = net_.spikes(cls_.output);
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    if (!out[k]) continue;
    if (last_class_ != static_cast<int>(k) || cod_since_class_) {
      log("classification", to_string(static_cast<SocketClass>(k)));
      if (stamp(report_.classification)) report_.first_classified = to_string(static_cast<SocketClass>(k));
      last_class_ = static_cast<int>(k);
      cod_since_class_ = false;
    }
    break;
  }

  if (any_spike(net_.spikes(nsm_.eb1_cod))) {
    ++report_.cod_count;
    stamp(report_.first_cod);
    log("cod");
    snapshot("cod");
    cod_since_class_ = true;
    awaiting_collapse_ = true;
  }
  if (awaiting_collapse_ && !sel_any) {
    awaiting_collapse_ = false;
    collapsed_ = true;
    if (stamp(report_.collapse)) log("collapse");
  }
  if (collapsed_ && report_.memory_peak < 0 && !mem.peaks.empty()) {
    stamp(report_.memory_peak);
    log("memory_peak", "row=" + fmt(mem.peaks.front().row) + " col=" + fmt(mem.peaks.front().col));
  }

  if (any_spike(net_.spikes(nsm_.eb1_cos)) && stamp(report_.cos)) {
    log("cos");
    snapshot("cos");
  }
  if (report_.cos >= 0 && report_.precondition_release < 0 && !any_spike(net_.spikes(nsm_.precondition))) {
    stamp(report_.precondition_release);
    log("precondition_release");
  }
  if (report_.cos >= 0 && any_spike(net_.spikes(nsm_.eb2_intention)) && stamp(report_.eb2_start)) log("eb2_start");

  DirectionSpikes dirs{};
  const auto sv = net_.spikes(servo_.outputs);
  for (std::size_t d = 0; d < kNumDirections; ++d) dirs[d] = sv[d] != 0;
  if (report_.cos >= 0 && std::any_of(dirs.begin(), dirs.end(), [](bool b) { return b; }) &&
      stamp(report_.servo_first)) {
    static constexpr const char* names[] = {"-z", "-y", "+y", "+x", "-x"};
    std::string d;
    for (std::size_t i = 0; i < kNumDirections; ++i)
      if (dirs[i]) d += (d.empty() ? "" : " ") + std::string(names[i]);
    log("servo", d);
  }

  // Pose changes take effect for the next rendered frame.
  if (const auto cmd = motion_.push(dirs)) plant_ = step_plant(plant_, *cmd);
  report_.trajectory.push_back({now, plant_.x, plant_.y, plant_.z, plant_.contact});
  if (plant_.contact && stamp(report_.contact_step)) {
    log("contact", "x=" + fmt(plant_.x) + " y=" + fmt(plant_.y));
    snapshot("contact");
  }

  monitor_.observe(net_);
  if (state() == NsmState::DONE && !done_) {
    done_ = true;
    log("done");
  }
}

void PipelineState::step() {
  inject_inputs();
  const StepRecord rec = net_.step();
  for (const auto& s : rec.samples)
    for (auto i : s.spikes) report_.raster.push_back({net_.name(s.pop), i, rec.t});
  observe();
}

PipelineState assemble_pipeline(const PipelineConfig& cfg) {
  return PipelineState(cfg, classifier_weights_for(cfg));
}

PipelineState assemble_pipeline(const PipelineConfig& cfg, const ClassifierWeights& weights) {
  return PipelineState(cfg, weights);
}

EpisodeReport run_episode(PipelineState& st, std::uint64_t max_steps) {
  for (std::uint64_t i = 0; i < max_steps && !st.done(); ++i) st.step();

  EpisodeReport r = st.report();
  const auto& net = st.network();
  r.max_steps = max_steps;
  r.steps = net.t();
  r.final_state = to_string(st.state());
  r.final_x = st.plant().x;
  r.final_y = st.plant().y;
  r.final_z = st.plant().z;
  r.contact = st.plant().contact;
  for (const auto& s : st.scene().sockets)
    if (s.cls == st.config().target) r.final_offset = std::hypot(r.final_x - s.x, r.final_y - s.y);
  r.success = r.contact && r.final_offset && *r.final_offset <= 2.0 * st.config().step_size;
  r.total_spikes = net.total_spikes();
  r.total_synops = net.total_synops();
  r.spikes_by_population.clear();
  for (PopId id = 0; id < net.population_count(); ++id) r.spikes_by_population.emplace_back(net.name(id), net.spike_count(id));
  return r;
}

std::string report_json(const EpisodeReport& r, bool include_probes) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["seed"] = r.seed;
  j["target"] = r.target;
  j["max_steps"] = r.max_steps;
  j["steps"] = r.steps;
  j["final_state"] = r.final_state;
  j["success"] = r.success;
  j["contact"] = r.contact;
  j["final_pose"] = {{"x", r.final_x}, {"y", r.final_y}, {"z", r.final_z}};
  j["final_offset"] = r.final_offset ? ordered_json(*r.final_offset) : ordered_json(nullptr);
  j["first_attended"] = r.first_attended;
  j["first_classified"] = r.first_classified;
  j["cod_count"] = r.cod_count;
  ordered_json ph;
  const std::pair<const char*, std::int64_t> phases[] = {
      {"first_dnf_spike", r.first_dnf_spike}, {"peak_formed", r.peak_formed},
      {"classification", r.classification},   {"cod", r.first_cod},
      {"collapse", r.collapse},               {"memory_peak", r.memory_peak},
      {"second_peak", r.second_peak},         {"cos", r.cos},
      {"precondition_release", r.precondition_release}, {"eb2_start", r.eb2_start},
      {"servo", r.servo_first},               {"contact", r.contact_step}};
  for (const auto& [k, v] : phases) ph[k] = v >= 0 ? ordered_json(v) : ordered_json(nullptr);
  j["phases"] = ph;
  ordered_json ev = ordered_json::array();
  for (const auto& e : r.events) ev.push_back({{"t", e.t}, {"kind", e.kind}, {"detail", e.detail}});
  j["events"] = ev;
  j["neurons"] = r.neuron_count;
  j["total_spikes"] = r.total_spikes;
  j["total_synops"] = r.total_synops;
  ordered_json sp;
  for (const auto& [k, v] : r.spikes_by_population) sp[k] = v;
  j["spikes_by_population"] = sp;
  if (include_probes) {
    ordered_json tr = ordered_json::array();
    for (const auto& p : r.trajectory) tr.push_back({p.t, p.x, p.y, p.z, p.contact});
    j["trajectory"] = tr;
    j["raster_rows"] = r.raster.size();
  }
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> emit_raster(const EpisodeReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto csv = dir / "raster.csv";
  {
    std::ofstream out(csv);
    if (!out) throw std::runtime_error("cannot write " + csv.string());
    out << "population,neuron,t\n";
    for (const auto& row : r.raster) out << row.population << ',' << row.neuron << ',' << row.t << '\n';
  }
  written.push_back(csv);
  for (const auto& s : r.snapshots) {
    const auto path = dir / ("v_" + s.population + "_" + std::to_string(s.t) + "_" + s.reason + ".pgm");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "P5\n" << s.shape.cols << ' ' << s.shape.rows << "\n255\n";
    // Black at or below zero, white at threshold.
    for (double v : s.v) {
      const double x = std::clamp(s.vth > 0.0 ? v / s.vth : 0.0, 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(x * 255.0))));
    }
    written.push_back(path);
  }
  return written;
}

void write_plant_csv(const EpisodeReport& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "t,x,y,z,contact\n";
  for (const auto& p : r.trajectory) out << p.t << ',' << p.x << ',' << p.y << ',' << p.z << ',' << p.contact << '\n';
}

}  // namespace dnfpipe
