#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "dnfpipe/classifier.hpp"
#include "dnfpipe/servo.hpp"

namespace dnfpipe {

inline constexpr std::size_t kSensorWidth = 640;
inline constexpr std::size_t kSensorHeight = 480;
inline constexpr std::size_t kFieldSide = 80;
inline constexpr std::size_t kBlockWidth = kSensorWidth / kFieldSide;    // 8
inline constexpr std::size_t kBlockHeight = kSensorHeight / kFieldSide;  // 6

struct EventFrame {
  std::uint64_t t = 0;
  std::vector<std::uint16_t> counts;  // 80x80 row-major
  bool operator==(const EventFrame&) const = default;
};

struct SensorImage {
  std::vector<std::uint32_t> counts;  // 640x480 row-major (y * 640 + x)
};

struct SocketSpec {
  SocketClass cls = SocketClass::USB;
  std::size_t quadrant = 0;  // 0 TL, 1 TR, 2 BL, 3 BR
  double x = 0.0;            // scene units; one unit spans one field cell
  double y = 0.0;
  double density = 0.5;  // interior events per pixel per bin
};

struct SceneSpec {
  std::array<SocketSpec, 4> sockets{};
  double tremor_amp_px = 2.0;
  double tremor_hz = 100.0;
  double bin_ms = 20.0;
  double contour_rate = 0.25;  // extra events per contour pixel per bin
  double noise_rate = 0.002;   // background events per pixel per bin
  std::uint64_t seed = 1;

  // One socket per quadrant, centred 20 units from the board centre.
  static SceneSpec standard(const std::array<SocketClass, 4>& by_quadrant,
                            const std::array<double, kNumClasses>& density_by_class);
};

// Socket silhouette as pixel offsets from its centre.
std::vector<std::pair<int, int>> socket_mask(SocketClass cls);
// Mask pixels with at least one 4-neighbour outside the mask.
std::vector<std::pair<int, int>> contour_points(const std::vector<std::pair<int, int>>& mask);

// Field position (row, col) of a scene point seen from the plant pose.
std::pair<double, double> project_to_field(double sx, double sy, const PlantState& pose);

SensorImage render_sensor(const SceneSpec& spec, const PlantState& pose, std::uint64_t bin);
EventFrame render_events(const SceneSpec& spec, const PlantState& pose, std::uint64_t bin);

// Block means over 8x6 pixels; the EventFrame form keeps block sums (mean * 48).
std::vector<double> downsample_mean(const SensorImage& img);
EventFrame downsample(const SensorImage& img, std::uint64_t t = 0);

// Injection probability per field neuron: min(1, count * gain).
std::vector<double> injection_probability(const EventFrame& f, double gain);

// Binary: "DNFE", u32 version, rows, cols, frames, then u16 counts; all little-endian.
void save_recorded(const std::filesystem::path& path, const std::vector<EventFrame>& frames);
void save_recorded_csv(const std::filesystem::path& path, const std::vector<EventFrame>& frames);
std::vector<EventFrame> load_recorded(const std::filesystem::path& path);

}  // namespace dnfpipe
