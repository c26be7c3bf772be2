#include "dnfpipe/nsm.hpp"

namespace dnfpipe {

NsmNodes build_nsm(Network& net, const SelectiveDnf& dnf, const MatchCircuits& circuits,
                   const ServoActor& servo, const MemoryDnf* memory, const NsmParams& p,
                   NsmWiring* wiring) {
  NsmNodes n;
  const Shape one{1, 1};
  n.eb1_intention = net.add_population("eb1_intention", Population(one, NeuronModel::LIF, p.eb1_intention));
  n.eb1_cos = net.add_population("eb1_cos", Population(one, NeuronModel::LIF_RESET, p.eb1_cos));
  n.eb1_cod = net.add_population("eb1_cod", Population(one, NeuronModel::LIF_REFRACTORY, p.eb1_cod));
  n.precondition = net.add_population("precondition", Population(one, NeuronModel::LIF, p.precondition));
  n.eb2_intention = net.add_population("eb2_intention", Population(one, NeuronModel::LIF, p.eb2_intention));
  n.eb2_cos = net.add_population("eb2_cos", Population(one, NeuronModel::LIF_RESET, p.eb2_cos));
  n.contact = net.add_population("contact", source_population(one));

  NsmWiring local;
  NsmWiring& w = wiring ? *wiring : local;
  auto link = [&](std::string name, PopId s, PopId d, double weight, bool optional = false) {
    if (optional && weight == 0.0) return;
    const std::size_t ns = net.population(s).size(), nd = net.population(d).size();
    w.projections.push_back(
        net.add_projection({std::move(name), s, d, 1, SparseWeights::all_to_all(ns, nd, weight)}));
  };
  // The 4 circuit neurons each reach the node, so the node sees their OR.
  link("matching->eb1_cos", circuits.matching, n.eb1_cos, p.w_matching_to_eb1_cos);
  link("non_matching->eb1_cod", circuits.non_matching, n.eb1_cod, p.w_non_matching_to_eb1_cod);
  link("eb1_intention->eb1_cos", n.eb1_intention, n.eb1_cos, p.w_eb1_intention_to_eb1_cos);
  link("eb1_intention->selective", n.eb1_intention, dnf.field, p.w_eb1_intention_to_selective);
  link("eb1_cos->eb1_intention", n.eb1_cos, n.eb1_intention, p.w_eb1_cos_to_eb1_intention);
  link("eb1_cod->selective", n.eb1_cod, dnf.field, p.w_eb1_cod_to_selective);
  link("eb1_cos->precondition", n.eb1_cos, n.precondition, p.w_eb1_cos_to_precondition);
  link("precondition->eb2_intention", n.precondition, n.eb2_intention, p.w_precondition_to_eb2_intention);
  link("eb2_intention->servo", n.eb2_intention, servo.outputs, p.w_eb2_intention_to_servo);
  link("eb2_intention->eb2_cos", n.eb2_intention, n.eb2_cos, p.w_eb2_intention_to_eb2_cos);
  link("eb2_cos->eb2_intention", n.eb2_cos, n.eb2_intention, p.w_eb2_cos_to_eb2_intention);
  link("contact->eb2_cos", n.contact, n.eb2_cos, p.w_contact_to_eb2_cos);
  link("eb1_cos->eb1_cos", n.eb1_cos, n.eb1_cos, p.w_eb1_cos_self, true);
  link("eb2_cos->eb2_cos", n.eb2_cos, n.eb2_cos, p.w_eb2_cos_self, true);
  link("eb1_cos->eb1_cod", n.eb1_cos, n.eb1_cod, p.w_eb1_cos_to_eb1_cod, true);
  link("eb2_intention->selective", n.eb2_intention, dnf.field, p.w_eb2_intention_to_selective, true);
  if (memory) link("eb1_cos->memory", n.eb1_cos, memory->field, p.w_eb1_cos_to_memory, true);
  return n;
}

const char* to_string(NsmState s) {
  switch (s) {
    case NsmState::SEARCHING: return "SEARCHING";
    case NsmState::SERVOING: return "SERVOING";
    case NsmState::DONE: return "DONE";
  }
  return "?";
}

void NsmMonitor::observe(const Network& net) {
  const std::uint64_t t = now_++;
  if (net.spikes(nodes_.eb1_intention)[0]) eb1_ = t;
  if (net.spikes(nodes_.eb1_cos)[0]) eb1_cos_ = t;
  if (net.spikes(nodes_.eb2_intention)[0]) eb2_ = t;
  if (net.spikes(nodes_.eb2_cos)[0]) eb2_cos_ = t;
}

bool NsmMonitor::within(std::optional<std::uint64_t> last, std::size_t window) const {
  return last && now_ - *last <= window;
}

NsmState NsmMonitor::state(std::size_t window) const {
  if (window < 3) throw ContractError("nsm_state window must be >= 3");
  if (now_ == 0 || within(eb1_, window)) return NsmState::SEARCHING;
  if (within(eb2_, window)) return NsmState::SERVOING;
  if (within(eb2_cos_, window)) return NsmState::DONE;
  // Between CoS and the first EB2 spike the search is already satisfied.
  return eb1_cos_ ? NsmState::SERVOING : NsmState::SEARCHING;
}

}  // namespace dnfpipe
