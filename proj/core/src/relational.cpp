#include "dnfpipe/relational.hpp"

namespace dnfpipe {

std::array<std::array<std::size_t, 2>, 4> quadrant_origins(Shape s) {
  const std::size_t hr = s.rows / 2, hc = s.cols / 2;
  return {{{0, 0}, {0, hc}, {hr, 0}, {hr, hc}}};
}

RelationalNetwork build_relational_network(Network& net, PopId input, const SelectiveDnf& dnf,
                                           const RelationalParams& p) {
  const Shape shape = net.population(dnf.field).shape();
  if (net.population(input).shape() != shape)
    throw ContractError("relational network: input and DNF field shapes differ");
  if (shape.rows % 2 || shape.cols % 2)
    throw ContractError("relational network: field sides must be even");
  const Shape half{shape.rows / 2, shape.cols / 2};
  const std::size_t n = shape.size();

  RelationalNetwork rn;
  // Both fields zero u and v every step so the select gate sees only same-step coincidences.
  rn.select_field = net.add_population("rn.select", Population(shape, NeuronModel::LIF_RESET, p.select));
  rn.gated_field = net.add_population("rn.gated", Population(half, NeuronModel::LIF_RESET, p.gated));
  rn.from_input = net.add_projection(
      {"input->rn.select", input, rn.select_field, 1, SparseWeights::one_to_one(n, p.w_input_to_select)});
  rn.from_dnf = net.add_projection(
      {"selective->rn.select", dnf.field, rn.select_field, 1, SparseWeights::one_to_one(n, p.w_dnf_to_select)});

  const auto origins = quadrant_origins(shape);
  for (std::size_t q = 0; q < 4; ++q) {
    // M_q is a full-field matrix that is nonzero only on quadrant q.
    std::vector<Triplet> t;
    t.reserve(half.size());
    for (std::size_t r = 0; r < half.rows; ++r) {
      for (std::size_t c = 0; c < half.cols; ++c) {
        const std::size_t src = (origins[q][0] + r) * shape.cols + origins[q][1] + c;
        t.push_back({static_cast<std::uint32_t>(src), static_cast<std::uint32_t>(r * half.cols + c),
                     p.w_select_to_gated});
      }
    }
    rn.quadrant[q] = net.add_projection({"rn.select->rn.gated.q" + std::to_string(q), rn.select_field,
                                         rn.gated_field, 1,
                                         SparseWeights::from_triplets(n, half.size(), std::move(t))});
  }
  return rn;
}

}  // namespace dnfpipe
