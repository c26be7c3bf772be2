#include "dnfpipe/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "dnfpipe/rng.hpp"

namespace dnfpipe {

SceneSpec SceneSpec::standard(const std::array<SocketClass, 4>& by_quadrant,
                              const std::array<double, kNumClasses>& density_by_class) {
  static constexpr std::array<std::array<double, 2>, 4> kCentres{{{-20, 20}, {20, 20}, {-20, -20}, {20, -20}}};
  SceneSpec s;
  for (std::size_t q = 0; q < 4; ++q) {
    auto& k = s.sockets[q];
    k.cls = by_quadrant[q];
    k.quadrant = q;
    k.x = kCentres[q][0];
    k.y = kCentres[q][1];
    k.density = density_by_class[static_cast<std::size_t>(k.cls)];
  }
  return s;
}

std::vector<std::pair<int, int>> socket_mask(SocketClass cls) {
  std::vector<std::pair<int, int>> m;
  auto rect = [&](int w_cells, int h_cells) {
    const int w = w_cells * static_cast<int>(kBlockWidth), h = h_cells * static_cast<int>(kBlockHeight);
    for (int dy = -h / 2; dy < h - h / 2; ++dy)
      for (int dx = -w / 2; dx < w - w / 2; ++dx) m.emplace_back(dx, dy);
  };
  switch (cls) {
    case SocketClass::USB: rect(8, 3); break;
    case SocketClass::ETHERNET: rect(5, 5); break;
    case SocketClass::HDMI: rect(3, 8); break;
    case SocketClass::POWER: {
      // Diagonal bar, 3 cells thick, inside a 7x7 cell box.
      for (int dy = -21; dy < 21; ++dy)
        for (int dx = -28; dx < 28; ++dx) {
          const double X = (dx + 0.5) / kBlockWidth, Y = (dy + 0.5) / kBlockHeight;
          if (std::abs(X - Y) <= 1.5) m.emplace_back(dx, dy);
        }
      break;
    }
  }
  return m;
}

std::vector<std::pair<int, int>> contour_points(const std::vector<std::pair<int, int>>& mask) {
  const std::set<std::pair<int, int>> in(mask.begin(), mask.end());
  std::vector<std::pair<int, int>> out;
  for (const auto& [x, y] : mask) {
    if (!in.count({x + 1, y}) || !in.count({x - 1, y}) || !in.count({x, y + 1}) || !in.count({x, y - 1}))
      out.emplace_back(x, y);
  }
  return out;
}

std::pair<double, double> project_to_field(double sx, double sy, const PlantState& pose) {
  const double c = static_cast<double>(kFieldSide / 2);
  return {c - (sy - pose.y), c + (sx - pose.x)};
}

SensorImage render_sensor(const SceneSpec& spec, const PlantState& pose, std::uint64_t bin) {
  SensorImage img;
  img.counts.assign(kSensorWidth * kSensorHeight, 0);
  Rng rng{spec.seed, bin, 0x5ce7eULL};
  const double two_pi_f = 2.0 * std::numbers::pi * spec.tremor_hz / 1000.0;
  auto emit = [&](double px, double py) {
    // Tremor displaces the whole view; the event time inside the bin sets the phase.
    const double phase = two_pi_f * rng.uniform() * spec.bin_ms;
    const long x = std::lround(px + spec.tremor_amp_px * std::cos(phase));
    const long y = std::lround(py + spec.tremor_amp_px * std::sin(phase));
    if (x < 0 || y < 0 || x >= static_cast<long>(kSensorWidth) || y >= static_cast<long>(kSensorHeight)) return;
    ++img.counts[static_cast<std::size_t>(y) * kSensorWidth + static_cast<std::size_t>(x)];
  };
  for (const auto& s : spec.sockets) {
    const auto [row, col] = project_to_field(s.x, s.y, pose);
    const double cx = col * kBlockWidth, cy = row * kBlockHeight;
    const auto mask = socket_mask(s.cls);
    for (const auto& [dx, dy] : mask)
      if (rng.bernoulli(s.density)) emit(cx + dx, cy + dy);
    // Edge contrast scales with tremor excursion.
    const double edge_p = std::min(1.0, spec.contour_rate * spec.tremor_amp_px / 2.0);
    for (const auto& [dx, dy] : contour_points(mask))
      if (rng.bernoulli(edge_p)) emit(cx + dx, cy + dy);
  }
  if (spec.noise_rate > 0.0) {
    const std::size_t n = kSensorWidth * kSensorHeight;
    std::binomial_distribution<std::size_t> count_dist(n, std::min(1.0, spec.noise_rate));
    std::mt19937_64 g(rng.next());
    const std::size_t k = count_dist(g);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t x = rng.below(kSensorWidth), y = rng.below(kSensorHeight);
      ++img.counts[y * kSensorWidth + x];
    }
  }
  return img;
}

EventFrame render_events(const SceneSpec& spec, const PlantState& pose, std::uint64_t bin) {
  return downsample(render_sensor(spec, pose, bin), bin);
}

namespace {

void check_sensor_shape(const SensorImage& img) {
  if (img.counts.size() != kSensorWidth * kSensorHeight)
    throw ContractError("downsample expects a 640x480 image, got " + std::to_string(img.counts.size()) + " pixels");
}

std::vector<std::uint64_t> block_sums(const SensorImage& img) {
  check_sensor_shape(img);
  std::vector<std::uint64_t> sums(kFieldSide * kFieldSide, 0);
  for (std::size_t y = 0; y < kSensorHeight; ++y)
    for (std::size_t x = 0; x < kSensorWidth; ++x)
      sums[(y / kBlockHeight) * kFieldSide + x / kBlockWidth] += img.counts[y * kSensorWidth + x];
  return sums;
}

}  // namespace

std::vector<double> downsample_mean(const SensorImage& img) {
  const auto sums = block_sums(img);
  std::vector<double> out(sums.size());
  const double area = static_cast<double>(kBlockWidth * kBlockHeight);
  for (std::size_t i = 0; i < sums.size(); ++i) out[i] = static_cast<double>(sums[i]) / area;
  return out;
}

EventFrame downsample(const SensorImage& img, std::uint64_t t) {
  const auto sums = block_sums(img);
  EventFrame f;
  f.t = t;
  f.counts.resize(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i)
    f.counts[i] = static_cast<std::uint16_t>(std::min<std::uint64_t>(sums[i], 0xFFFF));
  return f;
}

std::vector<double> injection_probability(const EventFrame& f, double gain) {
  std::vector<double> p(f.counts.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::min(1.0, f.counts[i] * gain);
  return p;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw ContractError("truncated event file header");
    v |= static_cast<std::uint32_t>(c & 0xFF) << (8 * i);
  }
  return v;
}

}  // namespace

void save_recorded(const std::filesystem::path& path, const std::vector<EventFrame>& frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write("DNFE", 4);
  put_u32(out, 1);
  put_u32(out, kFieldSide);
  put_u32(out, kFieldSide);
  put_u32(out, static_cast<std::uint32_t>(frames.size()));
  for (const auto& f : frames) {
    if (f.counts.size() != kFieldSide * kFieldSide) throw ContractError("event frame must be 80x80");
    for (auto c : f.counts) {
      out.put(static_cast<char>(c & 0xFF));
      out.put(static_cast<char>(c >> 8));
    }
  }
}

void save_recorded_csv(const std::filesystem::path& path, const std::vector<EventFrame>& frames) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "# dnfpipe-events rows=" << kFieldSide << " cols=" << kFieldSide << " frames=" << frames.size() << '\n';
  out << "t,row,col,count\n";
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& f = frames[k];
    for (std::size_t i = 0; i < f.counts.size(); ++i)
      if (f.counts[i]) out << k << ',' << i / kFieldSide << ',' << i % kFieldSide << ',' << f.counts[i] << '\n';
  }
}

namespace {

std::vector<EventFrame> load_csv(std::istream& in) {
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0, cols = 0, frames = 0;
  if (std::sscanf(line.c_str(), "# dnfpipe-events rows=%zu cols=%zu frames=%zu", &rows, &cols, &frames) != 3)
    throw ContractError("malformed event CSV header");
  if (rows != kFieldSide || cols != kFieldSide) throw ContractError("event CSV shape mismatch");
  std::getline(in, line);
  std::vector<EventFrame> out(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    out[k].t = k;
    out[k].counts.assign(rows * cols, 0);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t t = 0, r = 0, c = 0;
    unsigned n = 0;
    if (std::sscanf(line.c_str(), "%zu,%zu,%zu,%u", &t, &r, &c, &n) != 4 || t >= frames || r >= rows ||
        c >= cols || n > 0xFFFF)
      throw ContractError("malformed event CSV row '" + line + "'");
    out[t].counts[r * cols + c] = static_cast<std::uint16_t>(n);
  }
  return out;
}

}  // namespace

std::vector<EventFrame> load_recorded(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("cannot open '" + path.string() + "'");
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 0) return {};
  if (in.gcount() == 4 && std::string(magic, 4) == "# dn") {
    in.seekg(0);
    return load_csv(in);
  }
  if (in.gcount() != 4 || std::string(magic, 4) != "DNFE") throw ContractError("not a dnfpipe event file");
  const std::uint32_t version = get_u32(in);
  if (version != 1) throw ContractError("unsupported event file version " + std::to_string(version));
  const std::uint32_t rows = get_u32(in), cols = get_u32(in), frames = get_u32(in);
  if (rows != kFieldSide || cols != kFieldSide) throw ContractError("event file shape mismatch");
  std::vector<EventFrame> out(frames);
  std::vector<char> buf(static_cast<std::size_t>(rows) * cols * 2);
  for (std::uint32_t k = 0; k < frames; ++k) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) throw ContractError("truncated event file");
    out[k].t = k;
    out[k].counts.resize(static_cast<std::size_t>(rows) * cols);
    for (std::size_t i = 0; i < out[k].counts.size(); ++i)
      out[k].counts[i] = static_cast<std::uint16_t>(static_cast<unsigned char>(buf[2 * i]) |
                                                    (static_cast<unsigned char>(buf[2 * i + 1]) << 8));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ContractError("trailing bytes in event file");
  return out;
}

}  // namespace dnfpipe
