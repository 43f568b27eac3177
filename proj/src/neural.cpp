#include "swimrl/neural.hpp"

#include <cmath>

#include "json.hpp"

#include "swimrl/errors.hpp"

namespace swimrl::nn {

using nlohmann::json;

DenseNet DenseNet::make(std::vector<int> layer_sizes, Rng& rng,
                        bool zero_output) {
  if (layer_sizes.size() < 2)
    throw ConfigError("DenseNet needs at least input and output sizes");
  DenseNet net;
  net.sizes = std::move(layer_sizes);
  const int n_layers = static_cast<int>(net.sizes.size()) - 1;
  net.weights.resize(n_layers);
  net.biases.resize(n_layers);
  for (int l = 0; l < n_layers; ++l) {
    const int fan_in = net.sizes[l], fan_out = net.sizes[l + 1];
    net.weights[l].assign(static_cast<std::size_t>(fan_in) * fan_out, 0.0);
    net.biases[l].assign(fan_out, 0.0);
    if (zero_output && l == n_layers - 1) continue;
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : net.weights[l]) w = rng.uniform_in(-bound, bound);
  }
  return net;
}

int DenseNet::param_count() const {
  int n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<int>(weights[l].size() + biases[l].size());
  return n;
}

std::vector<double> DenseNet::forward(std::span<const double> input) const {
  Tape tape;
  return forward(input, tape);
}

std::vector<double> DenseNet::forward(std::span<const double> input,
                                      Tape& tape) const {
  if (static_cast<int>(input.size()) != input_size())
    throw ShapeMismatch("forward: input length does not match first layer");
  const int n_layers = layers();
  tape.acts.assign(n_layers + 1, {});
  tape.acts[0].assign(input.begin(), input.end());
  for (int l = 0; l < n_layers; ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    const bool last = (l == n_layers - 1);
    std::vector<double>& act = tape.acts[l + 1];
    act.assign(out, 0.0);
    const std::vector<double>& prev = tape.acts[l];
    for (int i = 0; i < out; ++i) {
      double z = biases[l][i];
      const double* row = &weights[l][static_cast<std::size_t>(i) * in];
      for (int j = 0; j < in; ++j) z += row[j] * prev[j];
      act[i] = last ? z : std::tanh(z);
    }
  }
  return tape.acts.back();
}

void DenseNet::backward(const Tape& tape, std::span<const double> out_adjoint,
                        std::span<double> grad) const {
  if (static_cast<int>(out_adjoint.size()) != output_size())
    throw ShapeMismatch("backward: adjoint length does not match output");
  if (static_cast<int>(grad.size()) != param_count())
    throw ShapeMismatch("backward: gradient buffer size mismatch");
  const int n_layers = layers();
  std::vector<double> delta(out_adjoint.begin(), out_adjoint.end());
  // Walk the flat layout [W0, b0, W1, b1, ...] from the back.
  std::vector<std::size_t> offsets(n_layers);
  std::size_t off = 0;
  for (int l = 0; l < n_layers; ++l) {
    offsets[l] = off;
    off += weights[l].size() + biases[l].size();
  }
  for (int l = n_layers - 1; l >= 0; --l) {
    const int in = sizes[l], out = sizes[l + 1];
    const std::vector<double>& prev = tape.acts[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + weights[l].size();
    for (int i = 0; i < out; ++i) {
      const double di = delta[i];
      double* grow = &gw[static_cast<std::size_t>(i) * in];
      for (int j = 0; j < in; ++j) grow[j] += di * prev[j];
      gb[i] += di;
    }
    if (l == 0) break;
    std::vector<double> next(in, 0.0);
    for (int j = 0; j < in; ++j) {
      double s = 0.0;
      for (int i = 0; i < out; ++i)
        s += weights[l][static_cast<std::size_t>(i) * in + j] * delta[i];
      const double a = prev[j];  // tanh activation of layer l
      next[j] = s * (1.0 - a * a);
    }
    delta.swap(next);
  }
}

void DenseNet::get_params(std::vector<double>& out) const {
  out.clear();
  out.reserve(param_count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.insert(out.end(), weights[l].begin(), weights[l].end());
    out.insert(out.end(), biases[l].begin(), biases[l].end());
  }
}

void DenseNet::set_params(std::span<const double> in) {
  if (static_cast<int>(in.size()) != param_count())
    throw ShapeMismatch("set_params: size mismatch");
  std::size_t off = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::copy(in.begin() + off, in.begin() + off + weights[l].size(),
              weights[l].begin());
    off += weights[l].size();
    std::copy(in.begin() + off, in.begin() + off + biases[l].size(),
              biases[l].begin());
    off += biases[l].size();
  }
}

std::string DenseNet::to_json() const {
  json j;
  j["sizes"] = sizes;
  j["activation"] = "tanh";
  j["weights"] = weights;
  j["biases"] = biases;
  return j.dump();
}

DenseNet DenseNet::from_json(const std::string& text) {
  json j = json::parse(text);
  DenseNet net;
  net.sizes = j.at("sizes").get<std::vector<int>>();
  if (j.at("activation").get<std::string>() != "tanh")
    throw ConfigError("DenseNet: unsupported activation in checkpoint");
  net.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  net.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  if (net.weights.size() + 1 != net.sizes.size() ||
      net.biases.size() != net.weights.size())
    throw ConfigError("DenseNet: inconsistent checkpoint layout");
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const std::size_t expect =
        static_cast<std::size_t>(net.sizes[l]) * net.sizes[l + 1];
    if (net.weights[l].size() != expect ||
        net.biases[l].size() != static_cast<std::size_t>(net.sizes[l + 1]))
      throw ConfigError("DenseNet: parameter block size mismatch");
  }
  return net;
}

std::vector<double> gradient(const DenseNet& net,
                             std::span<const double> out_adjoint,
                             std::span<const double> input) {
  DenseNet::Tape tape;
  net.forward(input, tape);
  std::vector<double> grad(net.param_count(), 0.0);
  net.backward(tape, out_adjoint, grad);
  return grad;
}

Optimizer::Optimizer(OptimizerConfig cfg, int n_params)
    : cfg_(cfg), m_(n_params, 0.0), v_(n_params, 0.0) {}

Optimizer::Status Optimizer::ascend(std::span<double> params,
                                    std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw ShapeMismatch("optimizer: parameter/gradient size mismatch");
  for (double g : grad)
    if (!std::isfinite(g)) {
      ++skipped_;
      return Status::skipped_non_finite;
    }
  ++steps_;
  if (cfg_.alpha_over_t) {
    const double step = cfg_.alpha / static_cast<double>(steps_);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] += step * grad[i];
    return Status::applied;
  }
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] += cfg_.alpha * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
  return Status::applied;
}

Optimizer::Status optimizer_step(Optimizer& opt, DenseNet& net,
                                 std::span<const double> grad) {
  std::vector<double> params;
  net.get_params(params);
  const Optimizer::Status st = opt.ascend(params, grad);
  if (st == Optimizer::Status::applied) net.set_params(params);
  return st;
}

}  // namespace swimrl::nn
