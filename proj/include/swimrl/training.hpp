#pragma once
// Episode rollout, return accounting, and the training loop shared by the
// experiment suites.

#include <cstdint>
#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include "swimrl/agents.hpp"
#include "swimrl/flows.hpp"
#include "swimrl/theory.hpp"

namespace swimrl::training {

using FlowSpec = std::variant<flows::BKFlowParams, flows::ABCFlowParams>;

int flow_dim(const FlowSpec& flow);
double flow_kappa(const FlowSpec& flow);

struct TrainConfig {
  int episodes = 250;
  int steps = 1000;       // N steps per episode, horizon T = N dt
  double dt = 0.01;
  double beta = 0.1;      // separation penalty weight in the reward
  double nu = 0.1;        // continuous discount; gamma = exp(-nu dt)
  double init_sigma = 0.0;  // per-component std of the initial separation
  double max_sep = 0.0;     // 0 picks the flow default (1e3 BK, 2 pi ABC)
  std::uint64_t master_seed = 1;
  int workers = 1;
  int eval_episodes = 16;        // learning-curve probe set, mean actions
  int final_eval_episodes = 500;

  double gamma() const;
  double horizon() const { return static_cast<double>(steps) * dt; }
  flows::IntegratorConfig integrator(const FlowSpec& flow) const;
  void validate() const;
};

// Time-indexed record of one rollout. times/states/actions/rewards share the
// length N; final_state closes the trajectory. Rewards are rates (per unit
// time). vphi, when recorded, has N+1 entries including the terminal zero.
struct EpisodeTrace {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> actions;      // as applied (clipped)
  std::vector<Vec> raw_actions;  // unclipped policy samples
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> vphi;
  Vec final_state = zero_vec();
  bool has_log_probs = false;
  bool aborted = false;
  int abort_step = -1;  // index of the transition that overflowed
  std::uint64_t seed = 0;
};

struct RolloutOptions {
  const theory::BaselineParams* vphi = nullptr;  // record physicist values
  double t_offset = 0.0;      // start the clock at t > 0 (shortens horizon)
  int steps_override = -1;    // if >= 0, run this many steps instead
  const Vec* fixed_s0 = nullptr;
  const char* stream_tag = "rollout";
};

// Initial separation is isotropic Gaussian (sigma = cfg.init_sigma per
// component); the ABC passive particle starts uniform on [0, 2 pi)^3.
// Deterministic given (master seed, stream tag, episode index).
EpisodeTrace rollout(const FlowSpec& flow, agents::Controller& controller,
                     const TrainConfig& cfg, std::uint64_t episode_index,
                     const RolloutOptions& opts = {});

// Exact discounted sum over step rewards, evaluated backward (Horner), so
// G_k = r_k + gamma G_{k+1} holds to machine precision.
double discounted_return(const EpisodeTrace& trace, double gamma);

// dt-weighted return: the estimator of the continuous discounted reward
// integral, comparable to the physicist value.
double time_weighted_return(const EpisodeTrace& trace, double gamma, double dt);

// One-step TD advantages against the physicist baseline: A_k =
// dt r_k + gamma V(t_{k+1}, s_{k+1}) - V(t_k, s_k). The horizon end and the
// closed form's B(T) = C(T) = 0 make the terminal bootstrap vanish exactly.
agents::Batch build_batch_physicist(const EpisodeTrace& trace,
                                    const theory::BaselineParams& baseline,
                                    double dt, double gamma);

// TD advantages and frozen regression targets from a learned critic;
// terminal steps bootstrap zero.
agents::Batch build_batch_critic(const EpisodeTrace& trace,
                                 const agents::A2CAgent& agent, double dt,
                                 double gamma);

using AgentVariant =
    std::variant<agents::APAgent, agents::A2CAgent, agents::PPOAgent>;

const agents::GaussianPolicy& policy_of(const AgentVariant& agent);

struct LearnPoint {
  int episode = 0;
  double mean_return = 0.0;
  double median_return = 0.0;
  double stderr_mean = 0.0;
};

struct TrainResult {
  std::vector<LearnPoint> curve;
  long skipped_updates = 0;
  bool aborted = false;  // 10 consecutive non-finite updates
};

// One rollout + one batch update per episode; the learning curve reports
// mean-action evaluation returns on a fixed held-out seed set.
TrainResult train(AgentVariant& agent, const FlowSpec& flow,
                  const TrainConfig& cfg);

using ControllerFactory =
    std::function<std::unique_ptr<agents::Controller>()>;

// dt-weighted returns over n_episodes held-out episodes (streams
// child_seed(master, tag, i)), in episode order; parallel but
// schedule-independent.
std::vector<double> evaluate(const FlowSpec& flow,
                             const ControllerFactory& make_controller,
                             const TrainConfig& cfg, int n_episodes,
                             const char* tag,
                             const theory::BaselineParams* vphi = nullptr);

}  // namespace swimrl::training
