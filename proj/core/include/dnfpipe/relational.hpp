#pragma once

#include <array>

#include "dnfpipe/dnf.hpp"

namespace dnfpipe {

struct RelationalParams {
  NeuronParams select{1000, 3300, 3.0};
  NeuronParams gated{300, 1000, 1.0};
  double w_input_to_select = 2.0;
  double w_dnf_to_select = 2.0;
  double w_select_to_gated = 2.0;
};

struct RelationalNetwork {
  PopId select_field = 0;
  PopId gated_field = 0;
  ProjId from_input = 0;
  ProjId from_dnf = 0;
  std::array<ProjId, 4> quadrant{};
};

// Quadrant origins in select-field coordinates: (0,0), (0,40), (40,0), (40,40).
std::array<std::array<std::size_t, 2>, 4> quadrant_origins(Shape select_shape);

RelationalNetwork build_relational_network(Network& net, PopId input, const SelectiveDnf& dnf,
                                           const RelationalParams& p = {});

}  // namespace dnfpipe
