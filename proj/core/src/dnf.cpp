#include "dnfpipe/dnf.hpp"

#include <algorithm>
#include <cmath>

namespace dnfpipe {

SelectiveDnf build_selective_dnf(Network& net, const SelectiveDnfParams& p) {
  SelectiveDnf d;
  d.field = net.add_population("selective", Population(p.shape, NeuronModel::LIF, p.field));
  d.inhibitor = net.add_population("inhibitor", Population({1, 1}, NeuronModel::LIF_RESET, p.inhibitor));
  d.recurrent = net.add_projection(kernel_projection("selective.kernel", d.field, p.kernel, p.shape));
  const std::size_t n = p.shape.size();
  d.to_inhibitor = net.add_projection(
      {"selective->inhibitor", d.field, d.inhibitor, 1, SparseWeights::all_to_all(n, 1, p.w_field_to_inhibitor)});
  d.from_inhibitor = net.add_projection(
      {"inhibitor->selective", d.inhibitor, d.field, 1, SparseWeights::all_to_all(1, n, p.w_inhibitor_to_field)});
  return d;
}

MemoryDnf build_memory_dnf(Network& net, const SelectiveDnf& dnf, const MemoryDnfParams& p) {
  const Shape shape = net.population(dnf.field).shape();
  const std::size_t n = shape.size();
  MemoryDnf m;
  m.field = net.add_population("memory", Population(shape, NeuronModel::LIF, p.field));
  m.recurrent = net.add_projection(kernel_projection("memory.kernel", m.field, p.kernel, shape));
  m.from_selective = net.add_projection(
      {"selective->memory", dnf.field, m.field, 1, SparseWeights::one_to_one(n, p.w_selective_to_memory)});
  m.to_selective = net.add_projection(
      {"memory->selective", m.field, dnf.field, 1, SparseWeights::one_to_one(n, p.w_memory_to_selective)});
  return m;
}

PeakSummary summarize_peaks(std::span<const std::vector<std::uint8_t>> window, Shape shape,
                            std::size_t min_size) {
  const std::size_t n = shape.size();
  std::vector<std::uint8_t> on(n, 0);
  for (const auto& f : window) {
    if (f.size() != n) throw ContractError("summarize_peaks: frame size mismatch");
    for (std::size_t i = 0; i < n; ++i) on[i] |= f[i];
  }
  PeakSummary out;
  std::vector<std::int32_t> label(n, -1);
  std::vector<std::size_t> stack;
  const long rows = static_cast<long>(shape.rows), cols = static_cast<long>(shape.cols);
  for (std::size_t s = 0; s < n; ++s) {
    if (!on[s] || label[s] >= 0) continue;
    label[s] = 1;
    stack.assign(1, s);
    double sr = 0.0, sc = 0.0;
    std::size_t count = 0;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const long r = static_cast<long>(i) / cols, c = static_cast<long>(i) % cols;
      sr += static_cast<double>(r);
      sc += static_cast<double>(c);
      ++count;
      for (long dr = -1; dr <= 1; ++dr) {
        for (long dc = -1; dc <= 1; ++dc) {
          const long rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
          const auto j = static_cast<std::size_t>(rr * cols + cc);
          if (on[j] && label[j] < 0) {
            label[j] = 1;
            stack.push_back(j);
          }
        }
      }
    }
    if (count >= min_size) out.peaks.push_back({sr / count, sc / count, count});
  }
  std::sort(out.peaks.begin(), out.peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.size != b.size) return a.size > b.size;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });
  return out;
}

PeakTracker::PeakTracker(Shape shape, std::size_t window, std::size_t min_size)
    : shape_(shape), window_(window), min_size_(min_size) {
  if (window_ < 1) throw ContractError("peak window must be >= 1");
}

void PeakTracker::push(std::span<const std::uint8_t> spikes) {
  if (spikes.size() != shape_.size()) throw ContractError("PeakTracker: frame size mismatch");
  frames_.emplace_back(spikes.begin(), spikes.end());
  while (frames_.size() > window_) frames_.pop_front();
}

PeakSummary PeakTracker::summary() const {
  std::vector<std::vector<std::uint8_t>> w(frames_.begin(), frames_.end());
  return summarize_peaks(w, shape_, min_size_);
}

bool within_radius(const Peak& p, double row, double col, double radius) {
  return std::hypot(p.row - row, p.col - col) <= radius;
}

}  // namespace dnfpipe
