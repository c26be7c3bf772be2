#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dnfpipe/classifier.hpp"
#include "dnfpipe/config.hpp"
#include "dnfpipe/dnf.hpp"
#include "dnfpipe/nsm.hpp"
#include "dnfpipe/relational.hpp"
#include "dnfpipe/rng.hpp"
#include "dnfpipe/scene.hpp"
#include "dnfpipe/servo.hpp"

namespace dnfpipe {

struct EpisodeEvent {
  std::uint64_t t = 0;
  std::string kind;
  std::string detail;
};

struct RasterRow {
  std::string population;
  std::uint32_t neuron = 0;
  std::uint64_t t = 0;
};

struct VoltageSnapshot {
  std::string population;
  std::string reason;
  std::uint64_t t = 0;
  Shape shape;
  double vth = 0.0;
  std::vector<double> v;
};

struct PlantSample {
  std::uint64_t t = 0;
  double x = 0.0, y = 0.0, z = 0.0;
  bool contact = false;
};

struct EpisodeReport {
  std::uint64_t seed = 0;
  std::string target;
  std::uint64_t max_steps = 0;
  std::uint64_t steps = 0;
  std::string final_state = "SEARCHING";
  std::vector<EpisodeEvent> events;

  // Phase stamps; -1 when the phase never happened.
  std::int64_t first_dnf_spike = -1;
  std::int64_t peak_formed = -1;
  std::int64_t classification = -1;
  std::int64_t first_cod = -1;
  std::int64_t collapse = -1;
  std::int64_t memory_peak = -1;
  std::int64_t second_peak = -1;
  std::int64_t cos = -1;
  std::int64_t precondition_release = -1;
  std::int64_t eb2_start = -1;
  std::int64_t servo_first = -1;
  std::int64_t contact_step = -1;

  std::uint64_t cod_count = 0;
  std::string first_attended;
  std::string first_classified;
  double final_x = 0.0, final_y = 0.0, final_z = 0.0;
  std::optional<double> final_offset;
  bool contact = false;
  bool success = false;

  std::uint64_t neuron_count = 0;
  std::uint64_t total_spikes = 0;
  std::uint64_t total_synops = 0;
  std::vector<std::pair<std::string, std::uint64_t>> spikes_by_population;

  std::vector<RasterRow> raster;
  std::vector<VoltageSnapshot> snapshots;
  std::vector<PlantSample> trajectory;
};

std::string report_json(const EpisodeReport& r, bool include_probes = false);

class PipelineState {
 public:
  PipelineState(const PipelineConfig& cfg, const ClassifierWeights& weights);

  const PipelineConfig& config() const { return cfg_; }
  Network& network() { return net_; }
  const Network& network() const { return net_; }
  const SceneSpec& scene() const { return scene_; }
  const PlantState& plant() const { return plant_; }
  NsmState state() const;

  PopId input() const { return input_; }
  const SelectiveDnf& selective() const { return sel_; }
  const MemoryDnf& memory() const { return mem_; }
  const RelationalNetwork& relational() const { return rn_; }
  const ClassifierNet& classifier() const { return cls_; }
  const MatchCircuits& circuits() const { return match_; }
  const NsmNodes& nsm() const { return nsm_; }
  const ServoActor& servo() const { return servo_; }

  // Replay recorded frames instead of rendering; frames past the end are silent.
  void set_frames(std::vector<EventFrame> frames);
  // Frames used so far, one per frame-hold period.
  const std::vector<EventFrame>& frames_used() const { return used_frames_; }
  void keep_frames(bool keep) { keep_frames_ = keep; }

  void step();
  const EpisodeReport& report() const { return report_; }
  bool done() const { return done_; }

  // Socket whose projected centre is nearest to a field position.
  std::size_t nearest_socket(double row, double col) const;
  std::pair<double, double> socket_field_position(std::size_t socket) const;

 private:
  void inject_inputs();
  void observe();
  void log(std::string kind, std::string detail = {});
  void snapshot(const std::string& reason);
  std::optional<std::size_t> attended_socket() const;

  PipelineConfig cfg_;
  Network net_;
  SceneSpec scene_;
  PlantState plant_;
  MotionFilter motion_;
  Rng rng_;

  PopId input_ = 0;
  SelectiveDnf sel_;
  MemoryDnf mem_;
  RelationalNetwork rn_;
  ClassifierNet cls_;
  MatchCircuits match_;
  ServoActor servo_;
  NsmNodes nsm_;
  NsmMonitor monitor_;
  PeakTracker sel_peaks_;
  PeakTracker mem_peaks_;
  double mem_footprint_ = 0.0;

  std::optional<std::vector<EventFrame>> replay_;
  std::vector<EventFrame> used_frames_;
  bool keep_frames_ = false;
  std::vector<double> drive_;
  std::vector<PopId> probed_;

  EpisodeReport report_;
  bool done_ = false;
  bool peak_active_ = false;
  std::size_t mem_peak_count_ = 0;
  int last_class_ = -1;
  bool cod_since_class_ = false;
  bool awaiting_collapse_ = false;
  bool collapsed_ = false;
};

// Every module's bias_shift replaced by the global neuron.bias_shift.
PipelineConfig apply_bias_shift(PipelineConfig cfg);
SceneSpec make_scene(const PipelineConfig& cfg);

// Loads classifier.weights when set, otherwise generates calibrated template weights.
ClassifierWeights classifier_weights_for(const PipelineConfig& cfg);
PipelineState assemble_pipeline(const PipelineConfig& cfg);
PipelineState assemble_pipeline(const PipelineConfig& cfg, const ClassifierWeights& weights);
EpisodeReport run_episode(PipelineState& state, std::uint64_t max_steps);

// Raster CSV (population,neuron,t) plus one PGM per voltage snapshot.
std::vector<std::filesystem::path> emit_raster(const EpisodeReport& r, const std::filesystem::path& dir);
void write_plant_csv(const EpisodeReport& r, const std::filesystem::path& path);

}  // namespace dnfpipe
