#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "dnfpipe/pipeline.hpp"
#include "dnfpipe/scene.hpp"
#include "support.hpp"

using namespace dnfpipe;
using namespace dnfpipe::testing;
namespace fs = std::filesystem;

namespace {

SceneSpec standard_scene(const PipelineConfig& cfg) { return make_scene(cfg); }

PlantState home(const PipelineConfig& cfg) { return PlantState{0.0, 0.0, cfg.z0, cfg.step_size}; }

std::array<std::uint64_t, 4> quadrant_counts(const EventFrame& f) {
  std::array<std::uint64_t, 4> q{};
  for (std::size_t i = 0; i < f.counts.size(); ++i) {
    const std::size_t r = i / kFieldSide, c = i % kFieldSide;
    q[(r >= kFieldSide / 2 ? 2 : 0) + (c >= kFieldSide / 2 ? 1 : 0)] += f.counts[i];
  }
  return q;
}

std::pair<double, double> centroid_in(const EventFrame& f, std::size_t quadrant) {
  const auto o = quadrant_origins({80, 80})[quadrant];
  double sr = 0, sc = 0, n = 0;
  for (std::size_t r = o[0]; r < o[0] + 40; ++r)
    for (std::size_t c = o[1]; c < o[1] + 40; ++c) {
      const double w = f.counts[r * kFieldSide + c];
      sr += w * r;
      sc += w * c;
      n += w;
    }
  return {sr / n, sc / n};
}

fs::path temp_file(const char* name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST_SUITE("scene") {
  TEST_CASE("zero rates give an all-zero frame") {
    SceneSpec s = standard_scene(default_config());
    for (auto& k : s.sockets) k.density = 0.0;
    s.contour_rate = 0.0;
    s.noise_rate = 0.0;
    const auto f = render_events(s, home(default_config()), 0);
    REQUIRE(f.counts.size() == 6400);
    CHECK(std::all_of(f.counts.begin(), f.counts.end(), [](auto c) { return c == 0; }));
  }

  TEST_CASE("at home the densest socket's quadrant collects the most events") {
    const auto cfg = default_config();
    const auto s = standard_scene(cfg);
    std::array<std::uint64_t, 4> total{};
    for (std::uint64_t b = 0; b < 20; ++b) {
      const auto q = quadrant_counts(render_events(s, home(cfg), b));
      for (std::size_t k = 0; k < 4; ++k) total[k] += q[k];
    }
    // Socket events scale with density times silhouette area.
    std::array<double, 4> expect{};
    for (std::size_t k = 0; k < 4; ++k)
      expect[k] = s.sockets[k].density * static_cast<double>(socket_mask(s.sockets[k].cls).size());
    const auto best = std::max_element(expect.begin(), expect.end()) - expect.begin();
    CHECK(std::max_element(total.begin(), total.end()) - total.begin() == best);
  }

  TEST_CASE("projection: socket centres and a +10 x pose shift") {
    const PlantState p0{0, 0, 16}, p1{10, 0, 16};
    CHECK(project_to_field(0, 0, p0) == std::pair{40.0, 40.0});
    CHECK(project_to_field(20, -20, p0) == std::pair{60.0, 60.0});
    CHECK(project_to_field(20, -20, p1) == std::pair{60.0, 50.0});
  }

  TEST_CASE("property: a +10 x pose shift moves every quadrant centroid 10 columns left") {
    auto cfg = default_config();
    SceneSpec s = standard_scene(cfg);
    s.noise_rate = 0.0;
    for (std::size_t q = 0; q < 4; ++q) {
      EventFrame a{0, std::vector<std::uint16_t>(6400, 0)}, b = a;
      for (std::uint64_t bin = 0; bin < 10; ++bin) {
        const auto fa = render_events(s, home(cfg), bin);
        PlantState shifted = home(cfg);
        shifted.x += 10.0;
        const auto fb = render_events(s, shifted, bin);
        for (std::size_t i = 0; i < 6400; ++i) {
          a.counts[i] += fa.counts[i];
          b.counts[i] += fb.counts[i];
        }
      }
      const auto [r0, c0] = centroid_in(a, q);
      const auto [exp_r, exp_c] = project_to_field(s.sockets[q].x, s.sockets[q].y, home(cfg));
      CHECK(r0 == doctest::Approx(exp_r).epsilon(0.03));
      CHECK(c0 == doctest::Approx(exp_c).epsilon(0.03));
      // Sockets on the left edge of a quadrant leave it when shifted; compare only those that stay.
      if (q == 1 || q == 3) {
        const auto [r1, c1] = centroid_in(b, q);
        CHECK(r1 == doctest::Approx(r0).epsilon(0.03));
        CHECK(c0 - c1 == doctest::Approx(10.0).epsilon(0.05));
      }
    }
  }

  TEST_CASE("downsample: one event, uniform 48 per block, conservation") {
    SensorImage img;
    img.counts.assign(kSensorWidth * kSensorHeight, 0);
    img.counts[7 * kSensorWidth + 13] = 1;  // block (1, 1)
    const auto m = downsample_mean(img);
    REQUIRE(m.size() == 6400);
    CHECK(m[1 * 80 + 1] == doctest::Approx(1.0 / 48.0));
    CHECK(std::accumulate(m.begin(), m.end(), 0.0) == doctest::Approx(1.0 / 48.0));

    std::fill(img.counts.begin(), img.counts.end(), 48u);
    const auto u = downsample_mean(img);
    CHECK(std::all_of(u.begin(), u.end(), [](double v) { return v == 48.0; }));

    Rng rng({0x91ULL, 1});
    std::uint64_t total = 0;
    for (auto& c : img.counts) total += (c = static_cast<std::uint32_t>(rng.below(4)));
    const auto f = downsample(img, 3);
    CHECK(f.t == 3);
    CHECK(std::accumulate(f.counts.begin(), f.counts.end(), std::uint64_t{0}) == total);
  }

  TEST_CASE("injection probability is min(1, count * gain)") {
    EventFrame f{0, std::vector<std::uint16_t>(6400, 0)};
    f.counts[0] = 12;
    f.counts[1] = 48;
    f.counts[2] = 500;
    const auto p = injection_probability(f, 1.0 / 48.0);
    CHECK(p[0] == doctest::Approx(0.25));
    CHECK(p[1] == 1.0);
    CHECK(p[2] == 1.0);
    CHECK(p[3] == 0.0);
  }

  TEST_CASE("recorded frames round-trip in binary and parse from CSV") {
    const auto cfg = default_config();
    const auto s = standard_scene(cfg);
    std::vector<EventFrame> frames;
    for (std::uint64_t b = 0; b < 100; ++b) {
      auto f = render_events(s, home(cfg), b);
      f.t = b;  // the binary form stores the frame index as t
      frames.push_back(std::move(f));
    }
    const fs::path bin = temp_file("dnfpipe_frames.bin"), csv = temp_file("dnfpipe_frames.csv");
    save_recorded(bin, frames);
    const auto back = load_recorded(bin);
    REQUIRE(back.size() == 100);
    CHECK(back == frames);
    for (std::size_t i = 1; i < back.size(); ++i) CHECK(back[i].t > back[i - 1].t);

    save_recorded_csv(csv, frames);
    CHECK(load_recorded(csv) == frames);

    save_recorded(bin, {});
    CHECK(load_recorded(bin).empty());
    std::ofstream(bin, std::ios::binary) << "DNFX";
    CHECK_THROWS(load_recorded(bin));
  }

  TEST_CASE("property: rendering is a pure function of seed, pose and bin") {
    const auto cfg = default_config();
    const auto s = standard_scene(cfg);
    PlantState p{3, -2, 16};
    CHECK(render_events(s, p, 17) == render_events(s, p, 17));
    CHECK_FALSE(render_events(s, p, 17) == render_events(s, p, 18));
  }

  TEST_CASE("property: at least 95% of socket events stay in the socket's quadrant") {
    const auto cfg = default_config();
    for (std::size_t q = 0; q < 4; ++q) {
      SceneSpec s = standard_scene(cfg);
      s.noise_rate = 0.0;
      // Only socket q stays on the sensor.
      for (std::size_t k = 0; k < 4; ++k)
        if (k != q) s.sockets[k].x = 1e6;
      std::array<std::uint64_t, 4> total{};
      for (std::uint64_t b = 0; b < 10; ++b) {
        const auto c = quadrant_counts(render_events(s, home(cfg), b));
        for (std::size_t k = 0; k < 4; ++k) total[k] += c[k];
      }
      const auto all = std::accumulate(total.begin(), total.end(), std::uint64_t{0});
      REQUIRE(all > 0);
      CHECK(static_cast<double>(total[q]) >= 0.95 * static_cast<double>(all));
    }
  }
}
