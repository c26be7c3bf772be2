#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "dnfpipe/topology.hpp"

namespace dnfpipe {

struct SelectiveDnfParams {
  Shape shape{80, 80};
  NeuronParams field{809, 2047, 30.0};
  KernelDescriptor kernel{KernelKind::GAUSSIAN_SELECTIVE, 6.0, {12.0, 12.0}, 0.0, {1.0, 1.0}, 0};
  NeuronParams inhibitor{4095, 3300, 10.0};
  double w_field_to_inhibitor = 1.0;
  double w_inhibitor_to_field = -10.0;
};

struct SelectiveDnf {
  PopId field = 0;
  PopId inhibitor = 0;
  ProjId recurrent = 0;
  ProjId to_inhibitor = 0;
  ProjId from_inhibitor = 0;
};

struct MemoryDnfParams {
  NeuronParams field{2000, 2000, 30.0};
  KernelDescriptor kernel{KernelKind::MEXICAN_HAT_MULTIPEAK, 13.0, {10.0, 10.0}, -10.0, {12.0, 12.0}, 0};
  double w_selective_to_memory = 8.0;
  double w_memory_to_selective = -5.0;
};

struct MemoryDnf {
  PopId field = 0;
  ProjId recurrent = 0;
  ProjId from_selective = 0;
  ProjId to_selective = 0;
};

SelectiveDnf build_selective_dnf(Network& net, const SelectiveDnfParams& p = {});
MemoryDnf build_memory_dnf(Network& net, const SelectiveDnf& dnf, const MemoryDnfParams& p = {});

struct Peak {
  double row = 0.0;
  double col = 0.0;
  std::size_t size = 0;
};

struct PeakSummary {
  std::vector<Peak> peaks;  // sorted by descending size, then row, then col
};

// 8-connected components of the union of `window` spike vectors; components smaller
// than `min_size` are dropped.
PeakSummary summarize_peaks(std::span<const std::vector<std::uint8_t>> window, Shape shape,
                            std::size_t min_size = 1);

// Rolling K-step window over one population's spikes.
class PeakTracker {
 public:
  PeakTracker(Shape shape, std::size_t window, std::size_t min_size = 1);
  void push(std::span<const std::uint8_t> spikes);
  PeakSummary summary() const;
  void clear() { frames_.clear(); }

 private:
  Shape shape_;
  std::size_t window_;
  std::size_t min_size_;
  std::deque<std::vector<std::uint8_t>> frames_;
};

// Centroid distance test used for masking footprints.
bool within_radius(const Peak& p, double row, double col, double radius);

}  // namespace dnfpipe
