#include "dnfpipe/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dnfpipe {

SparseWeights SparseWeights::from_triplets(std::size_t n_src, std::size_t n_dst,
                                           std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.src >= n_src || t.dst >= n_dst) throw ContractError("triplet index out of range");
    if (!std::isfinite(t.w)) throw ContractError("non-finite weight");
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });
  SparseWeights s;
  s.n_src = n_src;
  s.n_dst = n_dst;
  s.row_ptr.assign(n_src + 1, 0);
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (!s.dst.empty() && k > 0 && triplets[k - 1].src == t.src && triplets[k - 1].dst == t.dst) {
      s.w.back() += t.w;
      continue;
    }
    s.dst.push_back(t.dst);
    s.w.push_back(t.w);
    ++s.row_ptr[t.src + 1];
  }
  std::partial_sum(s.row_ptr.begin(), s.row_ptr.end(), s.row_ptr.begin());
  return s;
}

SparseWeights SparseWeights::one_to_one(std::size_t n, double w) {
  std::vector<Triplet> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), w};
  return from_triplets(n, n, std::move(t));
}

SparseWeights SparseWeights::all_to_all(std::size_t n_src, std::size_t n_dst, double w) {
  std::vector<Triplet> t;
  t.reserve(n_src * n_dst);
  for (std::size_t i = 0; i < n_src; ++i)
    for (std::size_t j = 0; j < n_dst; ++j)
      t.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), w});
  return from_triplets(n_src, n_dst, std::move(t));
}

void KernelDescriptor::validate() const {
  for (double s : width_exc)
    if (!(s > 0.0)) throw ContractError("kernel width_exc must be positive");
  for (double s : width_inh)
    if (!(s > 0.0)) throw ContractError("kernel width_inh must be positive");
  if (cutoff_radius < 0) throw ContractError("kernel cutoff_radius must be >= 0");
  if (kind == KernelKind::MEXICAN_HAT_MULTIPEAK && !(amp_inh < 0.0 && amp_exc >= 0.0))
    throw ContractError("mexican hat kernel requires amp_inh < 0 <= amp_exc");
}

int KernelDescriptor::effective_cutoff() const {
  if (cutoff_radius > 0) return cutoff_radius;
  double smax = std::max(width_exc[0], width_exc[1]);
  if (amp_inh != 0.0) smax = std::max({smax, width_inh[0], width_inh[1]});
  return static_cast<int>(std::ceil(3.0 * smax));
}

double KernelDescriptor::weight_at(int drow, int dcol) const {
  const int r = effective_cutoff();
  if (drow * drow + dcol * dcol > r * r) return 0.0;
  auto gauss = [&](const std::array<double, 2>& s) {
    const double a = drow / s[0];
    const double b = dcol / s[1];
    return std::exp(-0.5 * (a * a + b * b));
  };
  double w = amp_exc * gauss(width_exc);
  if (amp_inh != 0.0) w += amp_inh * gauss(width_inh);
  return w;
}

double KernelStencil::at(int drow, int dcol) const {
  if (std::abs(drow) > radius || std::abs(dcol) > radius) return 0.0;
  const int side = 2 * radius + 1;
  return w[static_cast<std::size_t>((drow + radius) * side + (dcol + radius))];
}

Population source_population(Shape shape) {
  return Population(shape, NeuronModel::LIF_RESET, NeuronParams{4096, 4096, 1.0});
}

KernelStencil expand_kernel(const KernelDescriptor& desc, Shape field_shape) {
  desc.validate();
  if (field_shape.size() == 0) throw ContractError("field shape must be positive");
  KernelStencil k;
  k.field = field_shape;
  k.radius = desc.effective_cutoff();
  const int side = 2 * k.radius + 1;
  k.w.assign(static_cast<std::size_t>(side * side), 0.0);
  for (int dr = -k.radius; dr <= k.radius; ++dr) {
    for (int dc = -k.radius; dc <= k.radius; ++dc) {
      const double w = desc.weight_at(dr, dc);
      k.w[static_cast<std::size_t>((dr + k.radius) * side + (dc + k.radius))] = w;
      if (w != 0.0) {
        k.nz_drow.push_back(dr);
        k.nz_dcol.push_back(dc);
        k.nz_w.push_back(w);
      }
    }
  }
  return k;
}

Projection kernel_projection(std::string name, PopId field, const KernelDescriptor& desc,
                             Shape field_shape) {
  Projection p;
  p.name = std::move(name);
  p.source = field;
  p.target = field;
  p.weights = expand_kernel(desc, field_shape);
  return p;
}

std::size_t Projection::n_src() const {
  return std::visit(
      [](const auto& w) -> std::size_t {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, KernelStencil>) return w.field.size();
        else return w.n_src;
      },
      weights);
}

std::size_t Projection::n_dst() const {
  return std::visit(
      [](const auto& w) -> std::size_t {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, KernelStencil>) return w.field.size();
        else return w.n_dst;
      },
      weights);
}

double Projection::weight(std::size_t src, std::size_t dst) const {
  if (src >= n_src() || dst >= n_dst()) throw ContractError("weight index out of range");
  return std::visit(
      [&](const auto& w) -> double {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, SparseWeights>) {
          for (auto k = w.row_ptr[src]; k < w.row_ptr[src + 1]; ++k)
            if (w.dst[k] == dst) return w.w[k];
          return 0.0;
        } else if constexpr (std::is_same_v<T, DenseWeights>) {
          return w.w[src * w.n_dst + dst];
        } else {
          const auto cols = static_cast<long>(w.field.cols);
          const long sr = static_cast<long>(src) / cols, sc = static_cast<long>(src) % cols;
          const long dr = static_cast<long>(dst) / cols, dc = static_cast<long>(dst) % cols;
          return w.at(static_cast<int>(dr - sr), static_cast<int>(dc - sc));
        }
      },
      weights);
}

std::size_t Projection::fanout(std::size_t src) const {
  return std::visit(
      [&](const auto& w) -> std::size_t {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, SparseWeights>) {
          std::size_t n = 0;
          for (auto k = w.row_ptr[src]; k < w.row_ptr[src + 1]; ++k) n += w.w[k] != 0.0;
          return n;
        } else if constexpr (std::is_same_v<T, DenseWeights>) {
          std::size_t n = 0;
          for (std::size_t j = 0; j < w.n_dst; ++j) n += w.w[src * w.n_dst + j] != 0.0;
          return n;
        } else {
          const long rows = static_cast<long>(w.field.rows), cols = static_cast<long>(w.field.cols);
          const long r = static_cast<long>(src) / cols, c = static_cast<long>(src) % cols;
          std::size_t n = 0;
          for (std::size_t k = 0; k < w.nz_w.size(); ++k) {
            const long rr = r + w.nz_drow[k], cc = c + w.nz_dcol[k];
            n += rr >= 0 && rr < rows && cc >= 0 && cc < cols;
          }
          return n;
        }
      },
      weights);
}

PopId Network::add_population(std::string name, Population pop) {
  if (t_ != 0) throw ContractError("cannot add populations after stepping");
  if (by_name_.count(name)) throw ContractError("duplicate population name '" + name + "'");
  const PopId id = pops_.size();
  by_name_.emplace(name, id);
  names_.push_back(std::move(name));
  const std::size_t n = pop.size();
  pops_.push_back(std::move(pop));
  inbound_.emplace_back();
  History h;
  h.dense.assign(depth_, std::vector<std::uint8_t>(n, 0));
  h.active.assign(depth_, {});
  history_.push_back(std::move(h));
  external_.emplace_back(n, 0.0);
  external_set_.push_back(0);
  spike_counts_.push_back(0);
  return id;
}

ProjId Network::add_projection(Projection proj) {
  if (t_ != 0) throw ContractError("cannot add projections after stepping");
  if (proj.source >= pops_.size() || proj.target >= pops_.size())
    throw ContractError("projection '" + proj.name + "' references a dangling population id");
  if (proj.delay < 1) throw ContractError("projection delay must be >= 1");
  if (proj.n_src() != pops_[proj.source].size() || proj.n_dst() != pops_[proj.target].size())
    throw ContractError("projection '" + proj.name + "' shape does not match its populations");
  ensure_history_depth(static_cast<std::size_t>(proj.delay));
  const ProjId id = projs_.size();
  inbound_[proj.target].push_back(id);
  projs_.push_back(std::move(proj));
  synop_counts_.push_back(0);
  return id;
}

void Network::ensure_history_depth(std::size_t depth) {
  if (depth <= depth_) return;
  depth_ = depth;
  for (std::size_t p = 0; p < pops_.size(); ++p) {
    history_[p].dense.assign(depth_, std::vector<std::uint8_t>(pops_[p].size(), 0));
    history_[p].active.assign(depth_, {});
    history_[p].head = 0;
  }
}

void Network::add_probe(PopId pop, bool voltages) {
  if (pop >= pops_.size()) throw ContractError("probe references a dangling population id");
  probes_.emplace_back(pop, voltages);
}

std::size_t Network::neuron_count() const {
  std::size_t n = 0;
  for (const auto& p : pops_) n += p.size();
  return n;
}

PopId Network::id(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) throw ContractError("unknown population '" + std::string(name) + "'");
  return it->second;
}

bool Network::has(std::string_view name) const { return by_name_.count(std::string(name)) > 0; }

void Network::inject(PopId id, std::span<const double> current) {
  if (id >= pops_.size()) throw ContractError("inject references a dangling population id");
  if (current.size() != pops_[id].size()) throw ContractError("inject length mismatch");
  auto& e = external_[id];
  for (std::size_t i = 0; i < e.size(); ++i) e[i] += current[i];
  external_set_[id] = 1;
}

void Network::inject_at(PopId id, std::size_t index, double current) {
  if (id >= pops_.size() || index >= pops_[id].size()) throw ContractError("inject_at out of range");
  external_[id][index] += current;
  external_set_[id] = 1;
}

std::span<const std::uint8_t> Network::spikes(PopId id, std::size_t lag) const {
  const auto& h = history_.at(id);
  if (lag >= depth_) throw ContractError("spike history lag exceeds network depth");
  return h.dense[(h.head + depth_ - lag) % depth_];
}

std::span<const std::uint32_t> Network::active(PopId id, std::size_t lag) const {
  const auto& h = history_.at(id);
  if (lag >= depth_) throw ContractError("spike history lag exceeds network depth");
  return h.active[(h.head + depth_ - lag) % depth_];
}

void Network::accumulate(const Projection& p, ProjId, std::vector<double>& out,
                         std::uint64_t* synops) const {
  const auto src_active = active(p.source, static_cast<std::size_t>(p.delay - 1));
  if (src_active.empty()) return;
  std::uint64_t n = 0;
  std::visit(
      [&](const auto& w) {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, SparseWeights>) {
          for (auto i : src_active) {
            for (auto k = w.row_ptr[i]; k < w.row_ptr[i + 1]; ++k) {
              out[w.dst[k]] += w.w[k];
              n += w.w[k] != 0.0;
            }
          }
        } else if constexpr (std::is_same_v<T, DenseWeights>) {
          for (auto i : src_active) {
            const double* row = w.w.data() + static_cast<std::size_t>(i) * w.n_dst;
            for (std::size_t j = 0; j < w.n_dst; ++j) {
              out[j] += row[j];
              n += row[j] != 0.0;
            }
          }
        } else {
          const long rows = static_cast<long>(w.field.rows), cols = static_cast<long>(w.field.cols);
          for (auto i : src_active) {
            const long r = static_cast<long>(i) / cols, c = static_cast<long>(i) % cols;
            for (std::size_t k = 0; k < w.nz_w.size(); ++k) {
              const long rr = r + w.nz_drow[k], cc = c + w.nz_dcol[k];
              if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
              out[static_cast<std::size_t>(rr * cols + cc)] += w.nz_w[k];
              ++n;
            }
          }
        }
      },
      p.weights);
  if (synops) *synops += n;
}

std::vector<std::vector<double>> Network::propagate() const {
  std::vector<std::vector<double>> cur(pops_.size());
  for (std::size_t p = 0; p < pops_.size(); ++p) {
    cur[p].assign(pops_[p].size(), 0.0);
    for (ProjId j : inbound_[p]) accumulate(projs_[j], j, cur[p], nullptr);
  }
  return cur;
}

StepRecord Network::step() {
  StepRecord rec;
  rec.t = t_;
  std::vector<double> cur;
  for (std::size_t p = 0; p < pops_.size(); ++p) {
    cur.assign(pops_[p].size(), 0.0);
    for (ProjId j : inbound_[p]) accumulate(projs_[j], j, cur, &synop_counts_[j]);
    if (external_set_[p]) {
      for (std::size_t i = 0; i < cur.size(); ++i) cur[i] += external_[p][i];
    }
    // Stash the current so every population sees pre-step history.
    external_[p].swap(cur);
  }
  for (std::size_t p = 0; p < pops_.size(); ++p) {
    auto sp = pops_[p].step(external_[p]);
    auto& h = history_[p];
    const std::size_t slot = (h.head + 1) % depth_;
    auto& dense = h.dense[slot];
    auto& act = h.active[slot];
    std::copy(sp.begin(), sp.end(), dense.begin());
    act.clear();
    for (std::size_t i = 0; i < sp.size(); ++i)
      if (sp[i]) act.push_back(static_cast<std::uint32_t>(i));
    spike_counts_[p] += act.size();
    std::fill(external_[p].begin(), external_[p].end(), 0.0);
    external_set_[p] = 0;
  }
  for (auto& h : history_) h.head = (h.head + 1) % depth_;
  for (const auto& [pop, volts] : probes_) {
    ProbeSample s;
    s.pop = pop;
    const auto a = active(pop);
    s.spikes.assign(a.begin(), a.end());
    if (volts) {
      const auto v = pops_[pop].v();
      s.v.assign(v.begin(), v.end());
    }
    rec.samples.push_back(std::move(s));
  }
  ++t_;
  return rec;
}

void Network::reset() {
  for (auto& p : pops_) p.reset();
  for (auto& h : history_) {
    for (auto& d : h.dense) std::fill(d.begin(), d.end(), std::uint8_t{0});
    for (auto& a : h.active) a.clear();
    h.head = 0;
  }
  for (auto& e : external_) std::fill(e.begin(), e.end(), 0.0);
  std::fill(external_set_.begin(), external_set_.end(), std::uint8_t{0});
  std::fill(spike_counts_.begin(), spike_counts_.end(), 0);
  std::fill(synop_counts_.begin(), synop_counts_.end(), 0);
  t_ = 0;
}

std::uint64_t Network::total_spikes() const {
  return std::accumulate(spike_counts_.begin(), spike_counts_.end(), std::uint64_t{0});
}

std::uint64_t Network::total_synops() const {
  return std::accumulate(synop_counts_.begin(), synop_counts_.end(), std::uint64_t{0});
}

}  // namespace dnfpipe
