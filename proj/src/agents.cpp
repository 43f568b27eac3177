#include "swimrl/agents.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "swimrl/errors.hpp"

namespace swimrl::agents {

namespace {
constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log sqrt(2 pi)

// Gradient of mean_batch[ weight_i * log pi(raw_i | s_i) ] with respect to
// [actor params..., log_std...]. Weights carry the advantage (and for PPO the
// ratio factor); entries with clip_mask = 0 contribute nothing.
std::vector<double> policy_objective_gradient(
    const GaussianPolicy& policy, const Batch& batch,
    const std::vector<double>& weights) {
  const int d = policy.d;
  const int n_actor = policy.actor.param_count();
  std::vector<double> grad(policy.param_count(), 0.0);
  if (batch.empty()) return grad;
  nn::DenseNet::Tape tape;
  std::vector<double> adj(d, 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const Transition& tr = batch[k];
    const double w = weights[k] * inv_n;
    if (w == 0.0) continue;
    const std::vector<double> feat = policy.features(tr.s);
    const std::vector<double> mean = policy.actor.forward(feat, tape);
    for (int i = 0; i < d; ++i) {
      const double sd = std::exp(policy.log_std[i]);
      const double z = (tr.raw_action[i] - mean[i]) / sd;
      // d log pi / d mean_i = z / sd ; d log pi / d log_std_i = z^2 - 1.
      adj[i] = w * z / sd;
      grad[n_actor + i] += w * (z * z - 1.0);
    }
    policy.actor.backward(tape, adj, std::span<double>(grad.data(), n_actor));
  }
  return grad;
}
}  // namespace

double reward(const Vec& s, const Vec& a, double beta, int d) {
  return -dot(a, a, d) - beta * dot(s, s, d);
}

Vec prescribed_action(const Vec& s, double phi, int d) {
  return scale(s, phi, d);
}

double td_advantage(double r, double v_next, double v_curr, double gamma) {
  return r + gamma * v_next - v_curr;
}

GaussianPolicy GaussianPolicy::make(int d, const std::vector<int>& hidden,
                                    double init_log_std, Rng& rng) {
  GaussianPolicy p;
  p.d = d;
  std::vector<int> sizes;
  sizes.push_back(d + 1);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(d);
  p.actor = nn::DenseNet::make(sizes, rng, /*zero_output=*/true);
  p.log_std.assign(d, init_log_std);
  return p;
}

std::vector<double> GaussianPolicy::features(const Vec& s) const {
  std::vector<double> f(d + 1);
  for (int i = 0; i < d; ++i) f[i] = s[i];
  f[d] = norm(s, d);
  return f;
}

Vec GaussianPolicy::mean_action(const Vec& s) const {
  const std::vector<double> out = actor.forward(features(s));
  Vec a = zero_vec();
  for (int i = 0; i < d; ++i) a[i] = std::clamp(out[i], -a_max, a_max);
  return a;
}

GaussianPolicy::Sample GaussianPolicy::sample(const Vec& s, Rng& rng) const {
  const std::vector<double> mean = actor.forward(features(s));
  Sample out;
  out.log_prob = 0.0;
  for (int i = 0; i < d; ++i) {
    const double sd = std::exp(log_std[i]);
    const double g = rng.normal();
    const double raw = mean[i] + sd * g;
    out.raw_action[i] = raw;
    out.action[i] = std::clamp(raw, -a_max, a_max);
    out.log_prob += -0.5 * g * g - log_std[i] - kLogSqrt2Pi;
  }
  return out;
}

double GaussianPolicy::log_prob(const Vec& s, const Vec& raw_action) const {
  const std::vector<double> mean = actor.forward(features(s));
  double lp = 0.0;
  for (int i = 0; i < d; ++i) {
    const double sd = std::exp(log_std[i]);
    const double z = (raw_action[i] - mean[i]) / sd;
    lp += -0.5 * z * z - log_std[i] - kLogSqrt2Pi;
  }
  return lp;
}

int GaussianPolicy::param_count() const { return actor.param_count() + d; }

void GaussianPolicy::get_params(std::vector<double>& out) const {
  actor.get_params(out);
  out.insert(out.end(), log_std.begin(), log_std.end());
}

void GaussianPolicy::set_params(std::span<const double> in) {
  if (static_cast<int>(in.size()) != param_count())
    throw ShapeMismatch("GaussianPolicy::set_params size mismatch");
  const int n_actor = actor.param_count();
  actor.set_params(in.subspan(0, n_actor));
  for (int i = 0; i < d; ++i) log_std[i] = in[n_actor + i];
}

std::string GaussianPolicy::to_json() const {
  nlohmann::json j;
  j["d"] = d;
  j["a_max"] = a_max;
  j["log_std"] = log_std;
  j["actor"] = nlohmann::json::parse(actor.to_json());
  return j.dump();
}

GaussianPolicy GaussianPolicy::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  GaussianPolicy p;
  p.d = j.at("d").get<int>();
  p.a_max = j.at("a_max").get<double>();
  p.log_std = j.at("log_std").get<std::vector<double>>();
  p.actor = nn::DenseNet::from_json(j.at("actor").dump());
  if (static_cast<int>(p.log_std.size()) != p.d)
    throw ConfigError("policy checkpoint: log_std length mismatch");
  return p;
}

GaussianPolicy::Sample policy_action(const GaussianPolicy& policy, const Vec& s,
                                     Rng& rng) {
  return policy.sample(s, rng);
}

APAgent APAgent::make(const GaussianPolicy& policy,
                      const theory::BaselineParams& baseline,
                      const nn::OptimizerConfig& opt_cfg) {
  baseline.validate();
  APAgent a{policy, baseline, nn::Optimizer(opt_cfg, policy.param_count())};
  return a;
}

A2CAgent A2CAgent::make(const GaussianPolicy& policy,
                        const std::vector<int>& critic_hidden,
                        const nn::OptimizerConfig& actor_cfg,
                        const nn::OptimizerConfig& critic_cfg, Rng& rng) {
  std::vector<int> sizes;
  sizes.push_back(policy.d + 1);
  sizes.insert(sizes.end(), critic_hidden.begin(), critic_hidden.end());
  sizes.push_back(1);
  A2CAgent a{policy, nn::DenseNet::make(sizes, rng, /*zero_output=*/true),
             nn::Optimizer(actor_cfg, policy.param_count()),
             nn::Optimizer(critic_cfg, 0)};
  a.critic_opt = nn::Optimizer(critic_cfg, a.critic.param_count());
  return a;
}

double A2CAgent::value(const Vec& s) const {
  return critic.forward(policy.features(s))[0];
}

nn::Optimizer::Status ap_update(APAgent& agent, const Batch& batch) {
  if (batch.empty()) throw ConfigError("ap_update: empty batch");
  std::vector<double> weights(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) weights[k] = batch[k].advantage;
  const std::vector<double> grad =
      policy_objective_gradient(agent.policy, batch, weights);
  std::vector<double> params;
  agent.policy.get_params(params);
  const auto st = agent.actor_opt.ascend(params, grad);
  if (st == nn::Optimizer::Status::applied) agent.policy.set_params(params);
  return st;
}

namespace {

nn::Optimizer::Status critic_regression_step(A2CAgent& agent,
                                             const Batch& batch) {
  // Descent on mean (target - V_w(s))^2 with frozen targets: ascend the
  // negated gradient.
  const int n = agent.critic.param_count();
  std::vector<double> grad(n, 0.0);
  nn::DenseNet::Tape tape;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const Transition& tr : batch) {
    const std::vector<double> feat = agent.policy.features(tr.s);
    const double v = agent.critic.forward(feat, tape)[0];
    const double err = tr.value_target - v;  // d(-loss)/dv = 2 err
    const double adj[1] = {2.0 * err * inv_n};
    agent.critic.backward(tape, adj, grad);
  }
  std::vector<double> params;
  agent.critic.get_params(params);
  const auto st = agent.critic_opt.ascend(params, grad);
  if (st == nn::Optimizer::Status::applied) agent.critic.set_params(params);
  return st;
}

}  // namespace

nn::Optimizer::Status a2c_update(A2CAgent& agent, const Batch& batch) {
  if (batch.empty()) throw ConfigError("a2c_update: empty batch");
  std::vector<double> weights(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) weights[k] = batch[k].advantage;
  const std::vector<double> grad =
      policy_objective_gradient(agent.policy, batch, weights);
  std::vector<double> params;
  agent.policy.get_params(params);
  const auto actor_st = agent.actor_opt.ascend(params, grad);
  if (actor_st == nn::Optimizer::Status::applied)
    agent.policy.set_params(params);
  const auto critic_st = critic_regression_step(agent, batch);
  return actor_st == nn::Optimizer::Status::applied ? critic_st : actor_st;
}

nn::Optimizer::Status ppo_update(PPOAgent& agent, const Batch& batch) {
  if (batch.empty()) throw ConfigError("ppo_update: empty batch");
  auto status = nn::Optimizer::Status::applied;
  std::vector<double> weights(batch.size());
  for (int epoch = 0; epoch < agent.epochs; ++epoch) {
    // Surrogate: mean min(rho A, clip(rho, 1 - eps, 1 + eps) A). Per sample,
    // the gradient is rho A grad(log pi) when the unclipped branch is active
    // and zero otherwise.
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const Transition& tr = batch[k];
      const double lp = agent.ac.policy.log_prob(tr.s, tr.raw_action);
      const double rho = std::exp(lp - tr.log_prob_old);
      const bool clipped = (tr.advantage >= 0.0)
                               ? rho > 1.0 + agent.clip_eps
                               : rho < 1.0 - agent.clip_eps;
      weights[k] = clipped ? 0.0 : rho * tr.advantage;
    }
    const std::vector<double> grad =
        policy_objective_gradient(agent.ac.policy, batch, weights);
    std::vector<double> params;
    agent.ac.policy.get_params(params);
    const auto st = agent.ac.actor_opt.ascend(params, grad);
    if (st == nn::Optimizer::Status::applied)
      agent.ac.policy.set_params(params);
    else
      status = st;
    const auto cst = critic_regression_step(agent.ac, batch);
    if (cst != nn::Optimizer::Status::applied) status = cst;
  }
  return status;
}

void HybridController::record_advantage(double a) {
  ring.push_back(a);
  while (static_cast<int>(ring.size()) > window) ring.pop_front();
}

bool HybridController::use_fallback() const {
  if (ring.empty()) return false;
  double s = 0.0;
  for (double a : ring) s += a;
  return s / static_cast<double>(ring.size()) < threshold;
}

Vec hybrid_action(HybridController& ctrl, const Vec& s, Rng& rng) {
  if (ctrl.use_fallback())
    return prescribed_action(s, ctrl.fallback_phi, ctrl.policy.d);
  return ctrl.policy.sample(s, rng).action;
}

Controller::Action PcController::act(const Vec& s, double, Rng&) {
  Action a;
  a.applied = prescribed_action(s, phi, d);
  a.raw = a.applied;
  return a;
}

Controller::Action PolicyController::act(const Vec& s, double, Rng& rng) {
  Action a;
  if (stochastic) {
    const GaussianPolicy::Sample smp = policy->sample(s, rng);
    a.applied = smp.action;
    a.raw = smp.raw_action;
    a.log_prob = smp.log_prob;
    a.has_log_prob = true;
  } else {
    a.applied = policy->mean_action(s);
    a.raw = a.applied;
  }
  return a;
}

Controller::Action HybridRolloutController::act(const Vec& s, double,
                                                Rng& rng) {
  Action a;
  if (hybrid->use_fallback()) {
    a.applied = prescribed_action(s, hybrid->fallback_phi, hybrid->policy.d);
    a.raw = a.applied;
  } else if (stochastic) {
    const GaussianPolicy::Sample smp = hybrid->policy.sample(s, rng);
    a.applied = smp.action;
    a.raw = smp.raw_action;
    a.log_prob = smp.log_prob;
    a.has_log_prob = true;
  } else {
    a.applied = hybrid->policy.mean_action(s);
    a.raw = a.applied;
  }
  return a;
}

void HybridRolloutController::post_step(double advantage) {
  hybrid->record_advantage(advantage);
}

}  // namespace swimrl::agents
