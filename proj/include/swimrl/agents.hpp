#pragma once
// Control policies: prescribed proportional control, the Gaussian policy and
// its actor-physicist / A2C / PPO update rules, and the hybrid switch.

#include <deque>
#include <memory>
#include <vector>

#include "swimrl/linalg.hpp"
#include "swimrl/neural.hpp"
#include "swimrl/theory.hpp"

namespace swimrl::agents {

// r = -|a|^2 - beta |s|^2, a rate in reward units per unit time.
double reward(const Vec& s, const Vec& a, double beta, int d);

// a = phi s.
Vec prescribed_action(const Vec& s, double phi, int d);

// A = r + gamma v_next - v_curr (terminal steps pass v_next = 0).
double td_advantage(double r, double v_next, double v_curr, double gamma);

struct PrescribedController;

// Diagonal Gaussian policy over the d-component control. The actor maps the
// features (s, |s|) to the action mean; the per-component log standard
// deviation is a free learnable parameter.
struct GaussianPolicy {
  nn::DenseNet actor;            // (d+1) -> d
  std::vector<double> log_std;   // d entries
  int d = 3;
  double a_max = 20.0;           // per-component action clip

  static GaussianPolicy make(int d, const std::vector<int>& hidden,
                             double init_log_std, Rng& rng);

  std::vector<double> features(const Vec& s) const;
  Vec mean_action(const Vec& s) const;

  struct Sample {
    Vec action;      // clipped, as applied to the environment
    Vec raw_action;  // unclipped Gaussian sample
    double log_prob; // of the unclipped sample
  };
  Sample sample(const Vec& s, Rng& rng) const;

  double log_prob(const Vec& s, const Vec& raw_action) const;

  int param_count() const;
  void get_params(std::vector<double>& out) const;    // [actor..., log_std...]
  void set_params(std::span<const double> in);

  std::string to_json() const;
  static GaussianPolicy from_json(const std::string& text);
};

// Spec-facing form of GaussianPolicy::sample.
GaussianPolicy::Sample policy_action(const GaussianPolicy& policy, const Vec& s,
                                     Rng& rng);

struct Transition {
  Vec s = zero_vec();
  Vec raw_action = zero_vec();
  double log_prob_old = 0.0;
  double advantage = 0.0;
  double value_target = 0.0;  // bootstrap target for critic regression
};
using Batch = std::vector<Transition>;

struct PrescribedController {
  double phi = 0.0;
};

struct APAgent {
  GaussianPolicy policy;
  theory::BaselineParams baseline;
  nn::Optimizer actor_opt;

  static APAgent make(const GaussianPolicy& policy,
                      const theory::BaselineParams& baseline,
                      const nn::OptimizerConfig& opt_cfg);
};

struct A2CAgent {
  GaussianPolicy policy;
  nn::DenseNet critic;  // (d+1) -> 1
  nn::Optimizer actor_opt;
  nn::Optimizer critic_opt;

  static A2CAgent make(const GaussianPolicy& policy,
                       const std::vector<int>& critic_hidden,
                       const nn::OptimizerConfig& actor_cfg,
                       const nn::OptimizerConfig& critic_cfg, Rng& rng);

  double value(const Vec& s) const;
};

struct PPOAgent {
  A2CAgent ac;
  double clip_eps = 0.2;
  int epochs = 4;
};

// One ascent step on mean_batch[ log pi(a|s) * A ]; the physicist baseline has
// no trainable parameters. Returns the optimizer status (skipped on
// non-finite gradients).
nn::Optimizer::Status ap_update(APAgent& agent, const Batch& batch);

// Actor step as in ap_update plus one critic descent step on the squared TD
// error with frozen bootstrap targets.
nn::Optimizer::Status a2c_update(A2CAgent& agent, const Batch& batch);

// Clipped-surrogate update over the configured epochs; stored log-probs act
// as the old policy.
nn::Optimizer::Status ppo_update(PPOAgent& agent, const Batch& batch);

// Falls back to prescribed control when the mean of the last n recorded
// advantages drops below the threshold. An empty ring means no evidence of
// failure, so the policy acts.
struct HybridController {
  GaussianPolicy policy;
  theory::BaselineParams baseline;
  double fallback_phi = 0.0;
  int window = 10;
  double threshold = 0.0;
  std::deque<double> ring;

  void record_advantage(double a);
  bool use_fallback() const;
};

Vec hybrid_action(HybridController& ctrl, const Vec& s, Rng& rng);

// Rollout-facing controller interface. post_step lets the hybrid track its
// advantage ring; everything else ignores it.
struct Controller {
  virtual ~Controller() = default;

  struct Action {
    Vec applied = zero_vec();
    Vec raw = zero_vec();
    double log_prob = 0.0;
    bool has_log_prob = false;
  };
  virtual Action act(const Vec& s, double t, Rng& rng) = 0;
  virtual void post_step(double advantage) { (void)advantage; }
  virtual bool wants_advantage() const { return false; }
};

struct PcController final : Controller {
  double phi;
  int d;
  PcController(double phi, int d) : phi(phi), d(d) {}
  Action act(const Vec& s, double, Rng&) override;
};

struct PolicyController final : Controller {
  const GaussianPolicy* policy;
  bool stochastic;
  PolicyController(const GaussianPolicy& p, bool stochastic)
      : policy(&p), stochastic(stochastic) {}
  Action act(const Vec& s, double, Rng& rng) override;
};

struct HybridRolloutController final : Controller {
  HybridController* hybrid;
  bool stochastic;
  HybridRolloutController(HybridController& h, bool stochastic)
      : hybrid(&h), stochastic(stochastic) {}
  Action act(const Vec& s, double, Rng& rng) override;
  void post_step(double advantage) override;
  bool wants_advantage() const override { return true; }
};

}  // namespace swimrl::agents
