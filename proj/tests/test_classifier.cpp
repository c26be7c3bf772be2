#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "dnfpipe/classifier.hpp"
#include "dnfpipe/templates.hpp"
#include "support.hpp"

using namespace dnfpipe;
using namespace dnfpipe::testing;
namespace fs = std::filesystem;

namespace {

const ClassifierWeights& templates() {
  static const ClassifierWeights w = generate_template_weights(default_config());
  return w;
}

std::vector<std::vector<std::uint8_t>> dense_stream(const std::vector<std::vector<std::uint32_t>>& active) {
  std::vector<std::vector<std::uint8_t>> out;
  for (const auto& a : active) {
    std::vector<std::uint8_t> f(1600, 0);
    for (auto i : a) f[i] = 1;
    out.push_back(std::move(f));
  }
  return out;
}

fs::path temp_dir(const char* name) {
  const fs::path d = fs::temp_directory_path() / name;
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_SUITE("classifier") {
  TEST_CASE("socket class names round-trip") {
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      const auto c = static_cast<SocketClass>(k);
      CHECK(socket_class_from_string(to_string(c)) == c);
    }
    CHECK_THROWS_AS(socket_class_from_string("VGA"), ContractError);
  }

  TEST_CASE("architecture arithmetic: padded 5x5 conv keeps 40x40") {
    ClassifierArch a;
    a.conv1_channels = 8;
    a.conv2_channels = 16;
    CHECK(a.pool1_side() == 20);
    CHECK(a.pool2_side() == 10);
    // conv1 40x40x8, pool1 20x20x8, conv2 20x20x16, pool2 10x10x16, dense 512, output 4.
    CHECK(a.neuron_count() == 1600 * 8 + 400 * 8 + 400 * 16 + 100 * 16 + 512 + 4);
  }

  TEST_CASE("all-zero stream gives zero counts") {
    const std::vector<std::vector<std::uint8_t>> silent(30, std::vector<std::uint8_t>(1600, 0));
    const auto counts = classify_forward(templates(), silent, 30);
    for (auto c : counts) CHECK(c == 0);
    CHECK(winner(counts) == -1);
  }

  TEST_CASE("winner breaks ties toward the lowest class") {
    CHECK(winner({3, 5, 5, 1}) == 1);
    CHECK(winner({0, 0, 0, 2}) == 3);
  }

  TEST_CASE("template weights pick USB for a rendered USB socket") {
    const auto stream = dense_stream(record_gated_responses(default_config(), SocketClass::USB, 3, 40));
    const auto counts = classify_forward(templates(), stream, stream.size());
    CHECK(counts[0] > counts[1]);
    CHECK(counts[0] > counts[2]);
    CHECK(counts[0] > counts[3]);
  }

  TEST_CASE("template weights pick HDMI for a rendered HDMI socket") {
    const auto stream = dense_stream(record_gated_responses(default_config(), SocketClass::HDMI, 5, 40));
    const auto counts = classify_forward(templates(), stream, stream.size());
    CHECK(winner(counts) == 2);
  }

  TEST_CASE("property: forward pass is deterministic") {
    const auto stream = dense_stream(record_gated_responses(default_config(), SocketClass::ETHERNET, 4, 30));
    CHECK(classify_forward(templates(), stream, 30) == classify_forward(templates(), stream, 30));
  }

  TEST_CASE("pooled view: OR pooling and the shifted channel") {
    std::vector<std::uint8_t> g(1600, 0);
    g[0] = 1;               // pool2 cell (0,0) in channel 0
    g[5 * 40 + 5] = 1;      // pool1 (2,2): channel 0 cell (1,1), channel 1 cell (0,0)
    const auto p = pooled_view(g, 40);
    REQUIRE(p.size() == 200);
    CHECK(p[0] == 1);
    CHECK(p[1 * 10 + 1] == 1);
    CHECK(p[100 + 0] == 1);
    CHECK(std::count(p.begin(), p.end(), 1) == 3);
  }

  TEST_CASE("weights round-trip through the text container") {
    const fs::path d = temp_dir("dnfpipe_weights_rt");
    save_weights(templates(), d / "w.txt", d / "m.txt");
    const ClassifierWeights back = load_weights(d / "w.txt", d / "m.txt");
    CHECK(back.arch.dense1 == templates().arch.dense1);
    CHECK(back.has_bias());
    for (const auto& t : templates().layers) {
      const auto& b = back.layer(t.name);
      REQUIRE(b.shape == t.shape);
      CHECK(b.data == t.data);
    }
    CHECK(back.neurons[4].params.dv == templates().neurons[4].params.dv);
    CHECK(back.neurons[6].model == NeuronModel::LIF);
  }

  TEST_CASE("a missing layer is refused by name") {
    ClassifierWeights w = templates();
    w.layers.erase(std::remove_if(w.layers.begin(), w.layers.end(), [](const Tensor& t) { return t.name == "dense2"; }),
                   w.layers.end());
    CHECK_THROWS_WITH_AS(w.validate(), doctest::Contains("dense2"), ContractError);

    const fs::path d = temp_dir("dnfpipe_weights_missing");
    save_weights(templates(), d / "w.txt", d / "m.txt");
    std::ifstream in(d / "w.txt");
    std::ostringstream kept;
    std::string line;
    bool skip = false;
    while (std::getline(in, line)) {
      if (line.rfind("layer ", 0) == 0) skip = line.rfind("layer lateral", 0) == 0;
      if (!skip) kept << line << '\n';
    }
    std::ofstream(d / "w2.txt") << kept.str();
    CHECK_THROWS_WITH_AS(load_weights(d / "w2.txt", d / "m.txt"), doctest::Contains("lateral"), ContractError);
  }

  TEST_CASE("optional bias layers must come as a pair") {
    ClassifierWeights w = templates();
    w.layers.erase(std::remove_if(w.layers.begin(), w.layers.end(), [](const Tensor& t) { return t.name == "activity"; }),
                   w.layers.end());
    CHECK_THROWS_AS(w.validate(), ContractError);
  }

  TEST_CASE("classifier network adds the architecture plus the bias neuron") {
    Network net;
    const PopId gated = net.add_population("gated", source_population({40, 40}));
    const ClassifierNet c = build_classifier(net, gated, templates());
    CHECK(c.bias.has_value());
    CHECK(net.neuron_count() == 1600 + templates().neuron_count());
    CHECK(templates().neuron_count() == templates().arch.neuron_count() + 1);
  }

  TEST_CASE("matching circuits: worked examples") {
    CHECK(eval_match_circuits({1, 0, 0, 0}, {1, 0, 0, 0}) == std::pair{true, false});
    CHECK(eval_match_circuits({0, 1, 0, 0}, {1, 0, 0, 0}) == std::pair{false, true});
    for (std::size_t u = 0; u < kNumClasses; ++u) {
      std::array<bool, kNumClasses> user{};
      user[u] = true;
      CHECK(eval_match_circuits({0, 0, 0, 0}, user) == std::pair{false, false});
    }
    CHECK_THROWS_AS(eval_match_circuits({1, 0, 0, 0}, {1, 1, 0, 0}), ContractError);
  }

  TEST_CASE("property: exactly one circuit answers a single-class spike") {
    for (std::size_t c = 0; c < kNumClasses; ++c)
      for (std::size_t u = 0; u < kNumClasses; ++u) {
        std::array<bool, kNumClasses> cls{}, user{};
        cls[c] = user[u] = true;
        const auto [m, nm] = eval_match_circuits(cls, user);
        CHECK(m != nm);
        CHECK(m == (c == u));
      }
  }

  TEST_CASE("property: one source of weight 2 never triggers vth 3, two always do") {
    Network net;
    const PopId cls = net.add_population("cls", source_population({1, kNumClasses}));
    const MatchCircuits mc = build_match_circuits(net, cls, {});
    CHECK(net.population(mc.matching).params().vth == 2 * 2.0 - 1);
    Rng rng({0x51ULL, 1});
    for (int t = 0; t < 200; ++t) {
      std::array<bool, kNumClasses> a{}, b{};
      for (std::size_t k = 0; k < kNumClasses; ++k) {
        a[k] = rng.bernoulli(0.5);
        if (a[k]) net.inject_at(cls, k, 1.0);
      }
      const std::size_t u = rng.below(kNumClasses);
      b[u] = true;
      net.inject_at(mc.user_input, u, 1.0);
      net.step();
      net.step();
      const auto m = net.spikes(mc.matching);
      for (std::size_t k = 0; k < kNumClasses; ++k) REQUIRE(static_cast<bool>(m[k]) == (a[k] && b[k]));
    }
  }
}
