#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dnfpipe {

// Raised when a caller breaks an operation's precondition (shape, range, one-hot).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when neuron state stops being finite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NeuronModel : std::uint8_t { LIF, LIF_RESET, LIF_REFRACTORY };

const char* to_string(NeuronModel m);
NeuronModel neuron_model_from_string(const std::string& s);

struct NeuronParams {
  int du = 4096;  // 12-bit decay code, multiplier (1 - du/4096)
  int dv = 4096;
  double vth = 1.0;
  int bias_mant = 0;
  int bias_exp = 0;
  // b = mant * 2^(exp - bias_shift); a shift of 6 maps chip biases onto weight units.
  int bias_shift = 0;
  int refractory_delay = 0;

  double bias() const;
  void validate() const;  // throws ContractError
};

struct Shape {
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

class Population {
 public:
  Population(Shape shape, NeuronModel model, NeuronParams params);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return shape_.size(); }
  NeuronModel model() const { return model_; }
  const NeuronParams& params() const { return params_; }

  // One timestep of the current/voltage recurrence. Returns the spike vector (1 = spike).
  std::span<const std::uint8_t> step(std::span<const double> a_in);
  void reset();

  std::span<const double> u() const { return u_; }
  std::span<const double> v() const { return v_; }
  std::span<const std::int32_t> refrac_remaining() const { return refrac_; }
  std::span<const std::uint8_t> last_spikes() const { return spikes_; }

  // Direct state access for tests and warm starts; the refractory invariant is the caller's job.
  void set_state(std::size_t i, double u, double v, std::int32_t refrac = 0);

 private:
  Shape shape_;
  NeuronModel model_;
  NeuronParams params_;
  double du_mul_;
  double dv_mul_;
  double bias_;
  std::vector<double> u_;
  std::vector<double> v_;
  std::vector<std::int32_t> refrac_;
  std::vector<std::uint8_t> spikes_;
};

}  // namespace dnfpipe
