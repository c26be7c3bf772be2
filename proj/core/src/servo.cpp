#include "dnfpipe/servo.hpp"

#include <algorithm>

namespace dnfpipe {

DirectionSpikes servo_regions(std::size_t row, std::size_t col, double center_row, double center_col,
                              double radius) {
  const double r = static_cast<double>(row), c = static_cast<double>(col);
  const double dr = r - center_row, dc = c - center_col;
  DirectionSpikes m{};
  m[static_cast<std::size_t>(Direction::NEG_Z)] = dr * dr + dc * dc <= radius * radius;
  m[static_cast<std::size_t>(Direction::NEG_Y)] = r > center_row + radius;
  m[static_cast<std::size_t>(Direction::POS_Y)] = r < center_row - radius;
  m[static_cast<std::size_t>(Direction::POS_X)] = c > center_col + radius;
  m[static_cast<std::size_t>(Direction::NEG_X)] = c < center_col - radius;
  return m;
}

ServoActor build_servo(Network& net, const SelectiveDnf& dnf, const ServoParams& p) {
  if (!(p.radius >= 0.0)) throw ContractError("servo radius must be >= 0");
  const Shape shape = net.population(dnf.field).shape();
  ServoActor s;
  s.center_row = static_cast<double>(shape.rows / 2);
  s.center_col = static_cast<double>(shape.cols / 2);
  s.radius = p.radius;
  s.outputs = net.add_population("servo", Population({1, kNumDirections}, NeuronModel::LIF_RESET, p.outputs));
  std::vector<Triplet> t;
  for (std::size_t r = 0; r < shape.rows; ++r)
    for (std::size_t c = 0; c < shape.cols; ++c) {
      const auto m = servo_regions(r, c, s.center_row, s.center_col, s.radius);
      for (std::size_t k = 0; k < kNumDirections; ++k)
        if (m[k]) t.push_back({static_cast<std::uint32_t>(r * shape.cols + c), static_cast<std::uint32_t>(k), p.w_field});
    }
  s.from_field = net.add_projection(
      {"selective->servo", dnf.field, s.outputs, 1, SparseWeights::from_triplets(shape.size(), kNumDirections, std::move(t))});
  return s;
}

PlantState step_plant(PlantState p, const DirectionSpikes& s) {
  const double d = p.step_size;
  if (s[static_cast<std::size_t>(Direction::NEG_Y)]) p.y -= d;
  if (s[static_cast<std::size_t>(Direction::POS_Y)]) p.y += d;
  if (s[static_cast<std::size_t>(Direction::POS_X)]) p.x += d;
  if (s[static_cast<std::size_t>(Direction::NEG_X)]) p.x -= d;
  if (s[static_cast<std::size_t>(Direction::NEG_Z)]) {
    const double dz = std::min(d, p.z);
    p.z -= dz;
    p.x += p.descent_xy_shift * dz;
  }
  p.contact = p.z <= p.board_plane_z;
  return p;
}

MotionFilter::MotionFilter(std::size_t period) : period_(period) {
  if (period_ < 1) throw ContractError("control period must be >= 1");
}

std::optional<DirectionSpikes> MotionFilter::push(const DirectionSpikes& spikes) {
  for (std::size_t k = 0; k < kNumDirections; ++k) counts_[k] += spikes[k];
  if (++filled_ < period_) return std::nullopt;
  DirectionSpikes out{};
  // Majority over the period; a period of 1 passes spikes through.
  for (std::size_t k = 0; k < kNumDirections; ++k) out[k] = 2 * counts_[k] >= period_;
  reset();
  return out;
}

void MotionFilter::reset() {
  filled_ = 0;
  counts_.fill(0);
}

}  // namespace dnfpipe
