#include "dnfpipe/neuron.hpp"

#include <algorithm>
#include <cmath>

namespace dnfpipe {

const char* to_string(NeuronModel m) {
  switch (m) {
    case NeuronModel::LIF: return "LIF";
    case NeuronModel::LIF_RESET: return "LIF_RESET";
    case NeuronModel::LIF_REFRACTORY: return "LIF_REFRACTORY";
  }
  return "?";
}

NeuronModel neuron_model_from_string(const std::string& s) {
  if (s == "LIF") return NeuronModel::LIF;
  if (s == "LIF_RESET") return NeuronModel::LIF_RESET;
  if (s == "LIF_REFRACTORY") return NeuronModel::LIF_REFRACTORY;
  throw ContractError("unknown neuron model '" + s + "'");
}

double NeuronParams::bias() const {
  return std::ldexp(static_cast<double>(bias_mant), bias_exp - bias_shift);
}

void NeuronParams::validate() const {
  if (du < 0 || du > 4096) throw ContractError("du out of [0,4096]: " + std::to_string(du));
  if (dv < 0 || dv > 4096) throw ContractError("dv out of [0,4096]: " + std::to_string(dv));
  if (!(vth > 0.0) || !std::isfinite(vth)) throw ContractError("vth must be positive and finite");
  if (refractory_delay < 0) throw ContractError("refractory_delay must be >= 0");
}

Population::Population(Shape shape, NeuronModel model, NeuronParams params)
    : shape_(shape), model_(model), params_(params) {
  params_.validate();
  if (shape_.size() == 0) throw ContractError("population must have at least one neuron");
  du_mul_ = 1.0 - params_.du / 4096.0;
  dv_mul_ = 1.0 - params_.dv / 4096.0;
  bias_ = params_.bias();
  u_.assign(size(), 0.0);
  v_.assign(size(), 0.0);
  refrac_.assign(size(), 0);
  spikes_.assign(size(), 0);
}

std::span<const std::uint8_t> Population::step(std::span<const double> a_in) {
  if (a_in.size() != size()) {
    throw ContractError("input length " + std::to_string(a_in.size()) +
                        " does not match population size " + std::to_string(size()));
  }
  const double vth = params_.vth;
  const bool refractory = model_ == NeuronModel::LIF_REFRACTORY;
  bool finite = true;
  for (std::size_t i = 0; i < size(); ++i) {
    double u = u_[i] * du_mul_ + a_in[i];
    double v;
    bool spike = false;
    if (refractory && refrac_[i] > 0) {
      v = 0.0;
      --refrac_[i];
    } else if (v_[i] >= vth) {
      v = 0.0;
    } else {
      v = v_[i] * dv_mul_ + u + bias_;
      spike = v >= vth;
    }
    if (spike) {
      v = 0.0;
      if (refractory) refrac_[i] = params_.refractory_delay;
    }
    if (model_ == NeuronModel::LIF_RESET) {
      u = 0.0;
      v = 0.0;
    }
    finite = finite && std::isfinite(u) && std::isfinite(v);
    u_[i] = u;
    v_[i] = v;
    spikes_[i] = spike ? 1 : 0;
  }
  if (!finite) throw NumericError("non-finite neuron state");
  return spikes_;
}

void Population::reset() {
  std::fill(u_.begin(), u_.end(), 0.0);
  std::fill(v_.begin(), v_.end(), 0.0);
  std::fill(refrac_.begin(), refrac_.end(), 0);
  std::fill(spikes_.begin(), spikes_.end(), std::uint8_t{0});
}

void Population::set_state(std::size_t i, double u, double v, std::int32_t refrac) {
  if (i >= size()) throw ContractError("neuron index out of range");
  if (!std::isfinite(u) || !std::isfinite(v)) throw NumericError("non-finite state");
  u_[i] = u;
  v_[i] = v;
  refrac_[i] = refrac;
}

}  // namespace dnfpipe
