#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "dnfpipe/neuron.hpp"

namespace dnfpipe {

using PopId = std::size_t;
using ProjId = std::size_t;

struct Triplet {
  std::uint32_t src;
  std::uint32_t dst;
  double w;
};

// Row-compressed by source so propagation touches only spiking sources.
struct SparseWeights {
  std::size_t n_src = 0;
  std::size_t n_dst = 0;
  std::vector<std::uint32_t> row_ptr;
  std::vector<std::uint32_t> dst;
  std::vector<double> w;

  // Duplicate (src, dst) pairs are summed.
  static SparseWeights from_triplets(std::size_t n_src, std::size_t n_dst,
                                     std::vector<Triplet> triplets);
  static SparseWeights one_to_one(std::size_t n, double w);
  static SparseWeights all_to_all(std::size_t n_src, std::size_t n_dst, double w);
};

// Row-major [src][dst].
struct DenseWeights {
  std::size_t n_src = 0;
  std::size_t n_dst = 0;
  std::vector<double> w;
};

enum class KernelKind : std::uint8_t { GAUSSIAN_SELECTIVE, MEXICAN_HAT_MULTIPEAK };

struct KernelDescriptor {
  KernelKind kind = KernelKind::GAUSSIAN_SELECTIVE;
  double amp_exc = 0.0;
  std::array<double, 2> width_exc{1.0, 1.0};  // (sigma_row, sigma_col)
  double amp_inh = 0.0;
  std::array<double, 2> width_inh{1.0, 1.0};
  int cutoff_radius = 0;  // 0 selects ceil(3 * largest sigma)

  void validate() const;
  int effective_cutoff() const;
  double weight_at(int drow, int dcol) const;
};

// Recurrent stencil on one field; weight depends only on the index offset.
struct KernelStencil {
  Shape field;
  int radius = 0;
  std::vector<double> w;  // (2r+1)^2, row-major over (drow, dcol)
  std::vector<std::int32_t> nz_drow;
  std::vector<std::int32_t> nz_dcol;
  std::vector<double> nz_w;

  double at(int drow, int dcol) const;
};

using Weights = std::variant<SparseWeights, DenseWeights, KernelStencil>;

struct Projection {
  std::string name;
  PopId source = 0;
  PopId target = 0;
  int delay = 1;
  Weights weights;

  std::size_t n_src() const;
  std::size_t n_dst() const;
  double weight(std::size_t src, std::size_t dst) const;
  // Nonzero outgoing synapses of one source neuron.
  std::size_t fanout(std::size_t src) const;
};

// Spike source: fires in the step it receives an external current >= 1, holds no state.
Population source_population(Shape shape);

KernelStencil expand_kernel(const KernelDescriptor& desc, Shape field_shape);
Projection kernel_projection(std::string name, PopId field, const KernelDescriptor& desc,
                             Shape field_shape);

struct ProbeSample {
  PopId pop = 0;
  std::vector<std::uint32_t> spikes;
  std::vector<double> v;  // empty unless voltages were requested
};

struct StepRecord {
  std::uint64_t t = 0;
  std::vector<ProbeSample> samples;
};

class Network {
 public:
  PopId add_population(std::string name, Population pop);
  ProjId add_projection(Projection proj);
  void add_probe(PopId pop, bool voltages = false);

  std::size_t population_count() const { return pops_.size(); }
  std::size_t projection_count() const { return projs_.size(); }
  std::size_t neuron_count() const;

  PopId id(std::string_view name) const;
  bool has(std::string_view name) const;
  const std::string& name(PopId id) const { return names_.at(id); }
  Population& population(PopId id) { return pops_.at(id); }
  const Population& population(PopId id) const { return pops_.at(id); }
  const Projection& projection(ProjId id) const { return projs_.at(id); }

  // External current added to the next step's input; cleared after that step.
  void inject(PopId id, std::span<const double> current);
  void inject_at(PopId id, std::size_t index, double current);

  // Input currents for the upcoming step (without external injection).
  std::vector<std::vector<double>> propagate() const;
  StepRecord step();
  void reset();

  std::uint64_t t() const { return t_; }
  // Spikes emitted `lag` steps before the most recent step (lag 0 = most recent).
  std::span<const std::uint8_t> spikes(PopId id, std::size_t lag = 0) const;
  std::span<const std::uint32_t> active(PopId id, std::size_t lag = 0) const;

  std::uint64_t spike_count(PopId id) const { return spike_counts_.at(id); }
  std::uint64_t synop_count(ProjId id) const { return synop_counts_.at(id); }
  std::uint64_t total_spikes() const;
  std::uint64_t total_synops() const;

 private:
  struct History {
    std::vector<std::vector<std::uint8_t>> dense;
    std::vector<std::vector<std::uint32_t>> active;
    std::size_t head = 0;  // slot of the most recent step
  };

  void accumulate(const Projection& p, ProjId pid, std::vector<double>& out,
                  std::uint64_t* synops) const;
  void ensure_history_depth(std::size_t depth);

  std::vector<std::string> names_;
  std::unordered_map<std::string, PopId> by_name_;
  std::vector<Population> pops_;
  std::vector<Projection> projs_;
  std::vector<std::vector<ProjId>> inbound_;
  std::vector<History> history_;
  std::vector<std::vector<double>> external_;
  std::vector<std::uint8_t> external_set_;
  std::vector<std::pair<PopId, bool>> probes_;
  std::vector<std::uint64_t> spike_counts_;
  std::vector<std::uint64_t> synop_counts_;
  std::size_t depth_ = 1;
  std::uint64_t t_ = 0;
};

}  // namespace dnfpipe
