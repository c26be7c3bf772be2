#pragma once

#include <array>
#include <optional>

#include "dnfpipe/dnf.hpp"

namespace dnfpipe {

// Output order of the actor.
enum class Direction : std::uint8_t { NEG_Z = 0, NEG_Y = 1, POS_Y = 2, POS_X = 3, NEG_X = 4 };
inline constexpr std::size_t kNumDirections = 5;
using DirectionSpikes = std::array<bool, kNumDirections>;

struct ServoParams {
  NeuronParams outputs{4095, 3300, 62.0};
  double radius = 8.0;
  double w_field = 2.0;
};

struct ServoActor {
  PopId outputs = 0;
  ProjId from_field = 0;
  double center_row = 0.0;
  double center_col = 0.0;
  double radius = 0.0;
};

// Directional-field membership of one field index, in output order.
DirectionSpikes servo_regions(std::size_t row, std::size_t col, double center_row, double center_col,
                              double radius);

ServoActor build_servo(Network& net, const SelectiveDnf& dnf, const ServoParams& p = {});

struct PlantState {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double step_size = 1.0;
  double board_plane_z = 0.0;
  double descent_xy_shift = 0.0;  // xy drift per unit of descent, along +x
  bool contact = false;
};

PlantState step_plant(PlantState plant, const DirectionSpikes& spikes);

// Collects actor spikes over a control period and releases the per-axis majority.
class MotionFilter {
 public:
  explicit MotionFilter(std::size_t period);
  std::optional<DirectionSpikes> push(const DirectionSpikes& spikes);
  std::size_t period() const { return period_; }
  void reset();

 private:
  std::size_t period_;
  std::size_t filled_ = 0;
  std::array<std::size_t, kNumDirections> counts_{};
};

}  // namespace dnfpipe
