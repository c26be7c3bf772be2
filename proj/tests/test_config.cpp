#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "dnfpipe/config.hpp"
#include "dnfpipe/pipeline.hpp"

using namespace dnfpipe;

namespace {

std::string read_file(const char* path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// The default file with one key's line removed.
std::string without_key(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind(key + " ", 0) != 0) out += line + '\n';
  return out;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("default.cfg equals the built-in defaults") {
    const PipelineConfig file = load_config(DNFPIPE_DEFAULT_CONFIG);
    CHECK(dump_config(file) == dump_config(PipelineConfig{}));
  }

  TEST_CASE("appendix.cfg loads with the printed values") {
    const PipelineConfig a = load_config(DNFPIPE_APPENDIX_CONFIG);
    CHECK(a.bias_shift == 0);
    CHECK(a.nsm.w_eb2_intention_to_servo == 37.0);
    CHECK(dump_config(a) != dump_config(PipelineConfig{}));
  }

  TEST_CASE("dump and parse round-trip every key") {
    const auto keys = config_keys();
    CHECK(keys.size() == 126);
    CHECK(std::set<std::string>(keys.begin(), keys.end()).size() == keys.size());
    PipelineConfig cfg;
    cfg.seed = 99;
    cfg.z0 = 12.5;
    cfg.target = SocketClass::ETHERNET;
    CHECK(dump_config(parse_config(dump_config(cfg), {}, true)) == dump_config(cfg));
  }

  TEST_CASE("unknown, duplicate and missing keys are refused by name") {
    const std::string text = read_file(DNFPIPE_DEFAULT_CONFIG);
    CHECK_THROWS_WITH_AS(parse_config("servo.radiuss = 2\n"), doctest::Contains("servo.radiuss"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("run.seed = 1\nrun.seed = 2\n"), doctest::Contains("duplicate key 'run.seed'"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(without_key(text, "servo.radius"), {}, true),
                         doctest::Contains("missing key 'servo.radius'"), ConfigError);
    CHECK_NOTHROW(parse_config(without_key(text, "servo.radius")));
    CHECK_THROWS_WITH_AS(parse_config("no equals sign\n"), doctest::Contains("line 1"), ConfigError);
  }

  TEST_CASE("values are type and range checked") {
    CHECK_THROWS_WITH_AS(parse_config("run.seed = abc\n"), doctest::Contains("run.seed"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("run.target = VGA\n"), doctest::Contains("run.target"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("plant.control_period = 0\n"), doctest::Contains("plant.control_period"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("scene.noise_rate = 1.5\n"), doctest::Contains("scene.noise_rate"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("neuron.bias_shift = 31\n"), doctest::Contains("neuron.bias_shift"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("servo.radius = -1\n"), doctest::Contains("servo.radius"), ConfigError);
  }

  TEST_CASE("comments and blank lines are ignored; later overrides apply to a base") {
    const PipelineConfig cfg = parse_config("# note\n\n  run.seed = 5   # trailing\n");
    CHECK(cfg.seed == 5);
    PipelineConfig base;
    base.z0 = 3.0;
    CHECK(parse_config("run.seed = 2\n", base).z0 == 3.0);
  }

  TEST_CASE("apply_bias_shift reaches every module") {
    PipelineConfig cfg;
    cfg.bias_shift = 4;
    const PipelineConfig s = apply_bias_shift(cfg);
    CHECK(s.selective.field.bias_shift == 4);
    CHECK(s.memory.field.bias_shift == 4);
    CHECK(s.servo.outputs.bias_shift == 4);
    CHECK(s.nsm.eb2_intention.bias_shift == 4);
  }
}
