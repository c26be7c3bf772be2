#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dnfpipe/config.hpp"
#include "dnfpipe/pipeline.hpp"
#include "dnfpipe/templates.hpp"

namespace fs = std::filesystem;
using namespace dnfpipe;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> target;
  std::optional<int> max_steps;
  std::optional<std::string> probe;
  bool force = false;
  std::string report;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "Config file; every key is required")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Episode seed");
  cmd->add_option("--target", c.target, "Target class: USB, ETHERNET, HDMI or POWER");
  cmd->add_option("--max-steps", c.max_steps, "Step budget");
  cmd->add_option("--probe", c.probe, "Comma-separated populations to record");
  cmd->add_option("--set", c.overrides, "Override one key, as key=value")->take_all();
  cmd->add_flag("--force-classification", c.force, "Drive the classifier output with the attended socket's class");
  cmd->add_option("--report", c.report, "Write the JSON report here instead of stdout");
}

PipelineConfig resolve(const Common& c) {
  fs::path path = c.config;
  if (path.empty() && fs::exists(DNFPIPE_DEFAULT_CONFIG)) path = DNFPIPE_DEFAULT_CONFIG;
  PipelineConfig cfg = path.empty() ? PipelineConfig{} : load_config(path);
  std::string text;
  for (const auto& o : c.overrides) text += o + '\n';
  if (c.seed) text += "run.seed = " + std::to_string(*c.seed) + '\n';
  if (c.target) text += "run.target = " + *c.target + '\n';
  if (c.max_steps) text += "run.max_steps = " + std::to_string(*c.max_steps) + '\n';
  if (c.probe) text += "probe.populations = " + *c.probe + '\n';
  if (c.force) text += "run.force_classification = true\n";
  return parse_config(text, cfg);
}

void emit_report(const Common& c, const EpisodeReport& r, bool probes) {
  const std::string json = report_json(r, probes);
  if (c.report.empty()) {
    std::cout << json << '\n';
    return;
  }
  std::ofstream out(c.report);
  if (!out) throw std::runtime_error("cannot write report '" + c.report + "'");
  out << json << '\n';
}

int episode_exit(const EpisodeReport& r) { return r.success ? kExitSuccess : kExitFailure; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiking attention, classification and servoing pipeline"};
  app.require_subcommand(1);

  Common run_opts, rec_opts, rep_opts, gen_opts, dump_opts;
  auto* run = app.add_subcommand("run", "Run one closed-loop episode and print its report");
  add_common(run, run_opts);

  auto* rec = app.add_subcommand("record", "Run an episode and save the rendered event frames");
  add_common(rec, rec_opts);
  std::string rec_events;
  rec->add_option("--events", rec_events, "Output event file (.csv for text)")->required();

  auto* rep = app.add_subcommand("replay", "Run an episode driven by recorded event frames");
  add_common(rep, rep_opts);
  std::string rep_events;
  rep->add_option("--events", rep_events, "Recorded event file")->required()->check(CLI::ExistingFile);

  auto* gen = app.add_subcommand("gen-template-weights", "Calibrate template classifier weights");
  add_common(gen, gen_opts);
  std::string gen_weights, gen_manifest;
  gen->add_option("--weights", gen_weights, "Output weight file")->required();
  gen->add_option("--manifest", gen_manifest, "Output manifest file")->required();

  auto* dump = app.add_subcommand("probe-dump", "Run with probes and write raster CSV, PGM snapshots and plant CSV");
  add_common(dump, dump_opts);
  std::string dump_dir = "probe_out";
  dump->add_option("--out", dump_dir, "Output directory");
  bool dump_voltages = true;
  dump->add_option("--voltages", dump_voltages, "Take voltage snapshots at phase events");

  auto* keys = app.add_subcommand("config-dump", "Print every config key with its resolved value");
  Common keys_opts;
  add_common(keys, keys_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitSuccess : kExitConfig;
  }

  try {
    if (*run) {
      const auto cfg = resolve(run_opts);
      auto st = assemble_pipeline(cfg);
      const auto r = run_episode(st, static_cast<std::uint64_t>(cfg.max_steps));
      emit_report(run_opts, r, false);
      return episode_exit(r);
    }
    if (*rec) {
      const auto cfg = resolve(rec_opts);
      auto st = assemble_pipeline(cfg);
      st.keep_frames(true);
      const auto r = run_episode(st, static_cast<std::uint64_t>(cfg.max_steps));
      if (fs::path(rec_events).extension() == ".csv") save_recorded_csv(rec_events, st.frames_used());
      else save_recorded(rec_events, st.frames_used());
      emit_report(rec_opts, r, false);
      return episode_exit(r);
    }
    if (*rep) {
      const auto cfg = resolve(rep_opts);
      auto st = assemble_pipeline(cfg);
      st.set_frames(load_recorded(rep_events));
      const auto r = run_episode(st, static_cast<std::uint64_t>(cfg.max_steps));
      emit_report(rep_opts, r, false);
      return episode_exit(r);
    }
    if (*gen) {
      const auto cfg = resolve(gen_opts);
      save_weights(generate_template_weights(cfg), gen_weights, gen_manifest);
      std::cout << "wrote " << gen_weights << " and " << gen_manifest << '\n';
      return kExitSuccess;
    }
    if (*dump) {
      auto cfg = resolve(dump_opts);
      if (cfg.probe_populations.empty()) cfg.probe_populations = "selective,memory";
      cfg.probe_voltages = dump_voltages;
      auto st = assemble_pipeline(cfg);
      const auto r = run_episode(st, static_cast<std::uint64_t>(cfg.max_steps));
      fs::create_directories(dump_dir);
      const auto files = emit_raster(r, dump_dir);
      write_plant_csv(r, fs::path(dump_dir) / "plant.csv");
      emit_report(dump_opts, r, false);
      std::cerr << "wrote " << files.size() + 1 << " files to " << dump_dir << '\n';
      return episode_exit(r);
    }
    if (*keys) {
      std::cout << dump_config(resolve(keys_opts));
      return kExitSuccess;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
