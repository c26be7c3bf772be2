#include <cmath>
#include <vector>

#include "doctest.h"
#include "dnfpipe/scene.hpp"
#include "dnfpipe/servo.hpp"
#include "support.hpp"

using namespace dnfpipe;
using namespace dnfpipe::testing;

namespace {

constexpr auto kNegZ = static_cast<std::size_t>(Direction::NEG_Z);
constexpr auto kNegY = static_cast<std::size_t>(Direction::NEG_Y);
constexpr auto kPosY = static_cast<std::size_t>(Direction::POS_Y);
constexpr auto kPosX = static_cast<std::size_t>(Direction::POS_X);
constexpr auto kNegX = static_cast<std::size_t>(Direction::NEG_X);

struct ServoRig {
  PipelineConfig cfg = default_config();
  Network net;
  SelectiveDnf fake;
  PopId intention = 0;
  ServoActor servo;
  ServoRig() {
    fake.field = net.add_population("dnf", source_population({80, 80}));
    intention = net.add_population("eb2_intention", source_population({1, 1}));
    servo = build_servo(net, fake, cfg.servo);
    net.add_projection({"eb2->servo", intention, servo.outputs, 1,
                        SparseWeights::all_to_all(1, kNumDirections, cfg.nsm.w_eb2_intention_to_servo)});
  }
  // One step of a peak given as active field indices; returns the actor spikes of that step.
  DirectionSpikes step(const std::vector<std::size_t>& peak, bool intention_on) {
    for (auto i : peak) net.inject_at(fake.field, i, 1.0);
    if (intention_on) net.inject_at(intention, 0, 1.0);
    net.step();
    DirectionSpikes d{};
    const auto s = net.spikes(servo.outputs);
    for (std::size_t k = 0; k < kNumDirections; ++k) d[k] = s[k];
    return d;
  }
};

std::vector<std::size_t> disc(double row, double col, double radius) {
  std::vector<std::size_t> out;
  for (int r = 0; r < 80; ++r)
    for (int c = 0; c < 80; ++c)
      if (std::hypot(r - row, c - col) <= radius) out.push_back(static_cast<std::size_t>(r * 80 + c));
  return out;
}

}  // namespace

TEST_SUITE("servo") {
  TEST_CASE("region membership") {
    const auto br = servo_regions(60, 60, 40, 40, 2);
    CHECK(br == DirectionSpikes{0, 1, 0, 1, 0});
    CHECK(servo_regions(60, 20, 40, 40, 2) == DirectionSpikes{0, 1, 0, 0, 1});
    CHECK(servo_regions(10, 40, 40, 40, 2) == DirectionSpikes{0, 0, 1, 0, 0});
    CHECK(servo_regions(40, 40, 40, 40, 2) == DirectionSpikes{1, 0, 0, 0, 0});
    CHECK(servo_regions(41, 41, 40, 40, 2) == DirectionSpikes{1, 0, 0, 0, 0});
    // Band just outside the disc but inside |d| <= R on both axes drives nothing.
    CHECK(servo_regions(42, 42, 40, 40, 2) == DirectionSpikes{0, 0, 0, 0, 0});
  }

  TEST_CASE("peaks with intention on give the expected vectors") {
    ServoRig a, b, c;
    DirectionSpikes sa{}, sb{}, sc{};
    for (int t = 0; t < 5; ++t) {
      sa = a.step(disc(60, 60, 1.5), true);
      sb = b.step(disc(60, 20, 1.5), true);
      sc = c.step(disc(40, 40, 1.5), true);
    }
    CHECK(sa == DirectionSpikes{0, 1, 0, 1, 0});
    CHECK(sb == DirectionSpikes{0, 1, 0, 0, 1});
    CHECK(sc == DirectionSpikes{1, 0, 0, 0, 0});
  }

  TEST_CASE("step_plant: silent vector leaves the pose, [0,1,0,1,0] moves (+1,-1)") {
    PlantState p{3.0, 4.0, 10.0};
    CHECK(step_plant(p, {0, 0, 0, 0, 0}).x == 3.0);
    CHECK(step_plant(p, {0, 0, 0, 0, 0}).y == 4.0);
    const auto q = step_plant(p, {0, 1, 0, 1, 0});
    CHECK(q.x == 4.0);
    CHECK(q.y == 3.0);
    CHECK(q.z == 10.0);
    PlantState low{0.0, 0.0, 0.5};
    const auto r = step_plant(low, {1, 0, 0, 0, 0});
    CHECK(r.z == 0.0);
    CHECK(r.contact);
    PlantState shifted{0.0, 0.0, 5.0, 1.0, 0.0, 0.25};
    CHECK(step_plant(shifted, {1, 0, 0, 0, 0}).x == 0.25);
  }

  TEST_CASE("motion filter releases the per-axis majority once per period") {
    MotionFilter f(4);
    CHECK_FALSE(f.push({1, 1, 0, 0, 0}).has_value());
    CHECK_FALSE(f.push({1, 0, 0, 1, 0}).has_value());
    CHECK_FALSE(f.push({0, 0, 0, 1, 0}).has_value());
    const auto out = f.push({0, 0, 0, 0, 1});
    REQUIRE(out.has_value());
    CHECK(*out == DirectionSpikes{1, 0, 0, 1, 0});
    CHECK_THROWS_AS(MotionFilter(0), ContractError);
  }

  TEST_CASE("property: actor is silent without intention for any peak up to 30 neurons") {
    Rng rng({0x71ULL, 1});
    for (int k = 0; k < 300; ++k) {
      ServoRig rig;
      const double row = 5 + 70 * rng.uniform(), col = 5 + 70 * rng.uniform();
      auto peak = disc(row, col, 3.0);
      peak.resize(std::min<std::size_t>(peak.size(), 1 + rng.below(30)));
      for (int t = 0; t < 10; ++t) REQUIRE(rig.step(peak, false) == DirectionSpikes{});
    }
  }

  TEST_CASE("property: antagonists never fire together and motion points at the peak") {
    Rng rng({0x72ULL, 2});
    for (int k = 0; k < 300; ++k) {
      ServoRig rig;
      const double row = 5 + 70 * rng.uniform(), col = 5 + 70 * rng.uniform();
      const auto peak = disc(row, col, 1.5);
      for (int t = 0; t < 4; ++t) {
        const auto s = rig.step(peak, true);
        REQUIRE_FALSE((s[kPosX] && s[kNegX]));
        REQUIRE_FALSE((s[kPosY] && s[kNegY]));
        const auto p = step_plant(PlantState{0, 0, 10}, s);
        // Field rows grow downward while scene y grows upward.
        const double dot = p.x * (col - 40.0) + p.y * (40.0 - row);
        REQUIRE(dot >= 0.0);
        if (s[kNegZ]) REQUIRE((!s[kPosX] && !s[kNegX] && !s[kPosY] && !s[kNegY]));
      }
    }
  }

  TEST_CASE("property: closed loop centres over a socket before descending") {
    Rng rng({0x73ULL, 3});
    for (int k = 0; k < 6; ++k) {
      ServoRig rig;
      // Sockets sit on integer scene positions, reachable by unit steps.
      const double sx = static_cast<double>(rng.below(31)) - 15.0, sy = static_cast<double>(rng.below(31)) - 15.0;
      PlantState pose{0.0, 0.0, rig.cfg.z0, rig.cfg.step_size};
      MotionFilter filter(static_cast<std::size_t>(rig.cfg.control_period));
      bool descended = false;
      double prev_z = pose.z;
      for (int t = 0; t < 8000 && !pose.contact; ++t) {
        const auto [row, col] = project_to_field(sx, sy, pose);
        // A 13-neuron peak puts 4 neurons past any band edge it straddles; 9 neurons can stall at (R, R).
        const auto spikes = rig.step(disc(row, col, 2.0), true);
        if (const auto move = filter.push(spikes)) pose = step_plant(pose, *move);
        if (pose.z < prev_z && !descended) {
          descended = true;
          CHECK(std::hypot(pose.x - sx, pose.y - sy) <= 2.0 * pose.step_size);
        }
        REQUIRE(pose.z <= prev_z);
        prev_z = pose.z;
      }
      CHECK(pose.contact);
      CHECK(std::hypot(pose.x - sx, pose.y - sy) <= 2.0 * pose.step_size);
    }
  }
}
