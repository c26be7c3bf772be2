#pragma once

#include <cstdint>
#include <optional>

#include "dnfpipe/classifier.hpp"
#include "dnfpipe/dnf.hpp"
#include "dnfpipe/servo.hpp"

namespace dnfpipe {

struct NsmParams {
  NeuronParams eb1_intention{4095, 3300, 1.0, 1, 7, 6};
  NeuronParams eb1_cos{4095, 3300, 3.0};
  NeuronParams eb1_cod{4095, 3300, 1.0, 0, 0, 0, 50};
  NeuronParams precondition{1000, 1000, 1.0, 1, 7, 6};
  NeuronParams eb2_intention{1000, 1000, 1.0, 1, 7, 6};
  NeuronParams eb2_cos{4095, 3300, 3.0};

  double w_matching_to_eb1_cos = 2.0;
  double w_non_matching_to_eb1_cod = 2.0;
  double w_eb1_intention_to_eb1_cos = 2.0;
  double w_eb1_intention_to_selective = 0.0;
  double w_eb1_cos_to_eb1_intention = -100.0;
  double w_eb1_cod_to_selective = -120.0;
  double w_eb1_cos_to_precondition = -100.0;
  double w_precondition_to_eb2_intention = -1.0;
  double w_eb2_intention_to_servo = 37.0;
  double w_eb2_intention_to_eb2_cos = 2.0;
  double w_eb2_cos_to_eb2_intention = -100.0;

  // Not in the printed weight table; zero disables the projection.
  double w_eb1_cos_self = 0.0;
  double w_eb2_cos_self = 0.0;
  double w_eb1_cos_to_eb1_cod = 0.0;
  double w_eb1_cos_to_memory = 0.0;
  double w_eb2_intention_to_selective = 0.0;
  double w_contact_to_eb2_cos = 2.0;
};

struct NsmNodes {
  PopId eb1_intention = 0;
  PopId eb1_cos = 0;
  PopId eb1_cod = 0;
  PopId precondition = 0;
  PopId eb2_intention = 0;
  PopId eb2_cos = 0;
  PopId contact = 0;  // single-neuron source driven by the plant
};

struct NsmWiring {
  std::vector<ProjId> projections;
};

NsmNodes build_nsm(Network& net, const SelectiveDnf& dnf, const MatchCircuits& circuits,
                   const ServoActor& servo, const MemoryDnf* memory, const NsmParams& p,
                   NsmWiring* wiring = nullptr);

enum class NsmState : std::uint8_t { SEARCHING, SERVOING, DONE };
const char* to_string(NsmState s);

// Tracks the last spike step of the nodes that define the behavioral state.
class NsmMonitor {
 public:
  explicit NsmMonitor(const NsmNodes& nodes) : nodes_(nodes) {}
  void observe(const Network& net);
  NsmState state(std::size_t window) const;

 private:
  bool within(std::optional<std::uint64_t> last, std::size_t window) const;

  NsmNodes nodes_;
  std::uint64_t now_ = 0;  // number of observed steps
  std::optional<std::uint64_t> eb1_, eb1_cos_, eb2_, eb2_cos_;
};

}  // namespace dnfpipe
