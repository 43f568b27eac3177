#pragma once
// Minimal dense feed-forward network with exact reverse-mode gradients and an
// adaptive-moment optimizer. Hidden activations are tanh, the output is
// linear. This is the only learned function approximator in the project.

#include <span>
#include <string>
#include <vector>

#include "swimrl/rng.hpp"

namespace swimrl::nn {

struct DenseNet {
  std::vector<int> sizes;                       // [in, hidden..., out]
  std::vector<std::vector<double>> weights;     // per layer, row-major out x in
  std::vector<std::vector<double>> biases;      // per layer

  // Xavier-uniform init; the output layer is zeroed when zero_output is set
  // so fresh policies and critics start at exactly zero.
  static DenseNet make(std::vector<int> layer_sizes, Rng& rng,
                       bool zero_output = false);

  int layers() const { return static_cast<int>(weights.size()); }
  int input_size() const { return sizes.front(); }
  int output_size() const { return sizes.back(); }
  int param_count() const;

  std::vector<double> forward(std::span<const double> input) const;

  // Forward pass keeping post-activation values for the backward sweep.
  struct Tape {
    std::vector<std::vector<double>> acts;  // acts[0] = input, acts[L] = output
  };
  std::vector<double> forward(std::span<const double> input, Tape& tape) const;

  // Accumulates d(loss)/d(params) into grad (layout matching get_params) for
  // the scalar loss whose adjoint at the network output is out_adjoint.
  void backward(const Tape& tape, std::span<const double> out_adjoint,
                std::span<double> grad) const;

  void get_params(std::vector<double>& out) const;
  void set_params(std::span<const double> in);

  std::string to_json() const;
  static DenseNet from_json(const std::string& text);
};

// Convenience wrapper: exact gradient of the scalar loss with the given
// output adjoint, evaluated at one input.
std::vector<double> gradient(const DenseNet& net, std::span<const double> out_adjoint,
                             std::span<const double> input);

struct OptimizerConfig {
  double alpha = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Fidelity switch: plain ascent with step alpha / t instead of Adam.
  bool alpha_over_t = false;
};

// Gradient-ascent optimizer over a flat parameter vector.
class Optimizer {
 public:
  enum class Status { applied, skipped_non_finite };

  Optimizer() = default;
  Optimizer(OptimizerConfig cfg, int n_params);

  Status ascend(std::span<double> params, std::span<const double> grad);

  long steps() const { return steps_; }
  long skipped() const { return skipped_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  std::vector<double> m_, v_;
  long steps_ = 0;
  long skipped_ = 0;
};

// Spec-facing name: one ascent step on the network parameters.
Optimizer::Status optimizer_step(Optimizer& opt, DenseNet& net,
                                 std::span<const double> grad);

}  // namespace swimrl::nn
