#include "swimrl/training.hpp"

#include <cmath>

#include "swimrl/errors.hpp"
#include "swimrl/parallel.hpp"
#include "swimrl/stats.hpp"

namespace swimrl::training {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

int flow_dim(const FlowSpec& flow) {
  return std::visit([](const auto& f) { return static_cast<int>(f.d); }, flow);
}

double flow_kappa(const FlowSpec& flow) {
  return std::visit([](const auto& f) { return f.kappa; }, flow);
}

double TrainConfig::gamma() const { return std::exp(-nu * dt); }

flows::IntegratorConfig TrainConfig::integrator(const FlowSpec& flow) const {
  flows::IntegratorConfig ic;
  ic.dt = dt;
  if (max_sep > 0.0)
    ic.max_sep = max_sep;
  else
    ic.max_sep = std::holds_alternative<flows::ABCFlowParams>(flow)
                     ? flows::kAbcMaxSep
                     : 1e3;
  return ic;
}

void TrainConfig::validate() const {
  if (episodes < 0 || steps <= 0) throw ConfigError("train: bad episode/step counts");
  if (!(dt > 0.0)) throw ConfigError("train: dt must be > 0");
  if (!(nu > 0.0)) throw ConfigError("train: nu must be > 0");
  if (!(beta >= 0.0)) throw ConfigError("train: beta must be >= 0");
  if (!(init_sigma >= 0.0)) throw ConfigError("train: init_sigma must be >= 0");
}

EpisodeTrace rollout(const FlowSpec& flow, agents::Controller& controller,
                     const TrainConfig& cfg, std::uint64_t episode_index,
                     const RolloutOptions& opts) {
  const int d = flow_dim(flow);
  const int n_steps = opts.steps_override >= 0 ? opts.steps_override : cfg.steps;
  const flows::IntegratorConfig ic = cfg.integrator(flow);
  const double gamma = cfg.gamma();

  const std::uint64_t seed =
      child_seed(cfg.master_seed, opts.stream_tag, episode_index);
  Rng rng(seed);

  EpisodeTrace trace;
  trace.seed = seed;
  trace.times.reserve(n_steps);
  trace.states.reserve(n_steps);
  trace.actions.reserve(n_steps);
  trace.rewards.reserve(n_steps);
  if (opts.vphi) trace.vphi.reserve(n_steps + 1);

  // Initial separation; the ABC pair also needs an absolute anchor.
  Vec s = zero_vec();
  if (opts.fixed_s0) {
    s = *opts.fixed_s0;
  } else {
    for (int i = 0; i < d; ++i) s[i] = cfg.init_sigma * rng.normal();
  }
  flows::PairState pair;
  const bool is_abc = std::holds_alternative<flows::ABCFlowParams>(flow);
  std::unique_ptr<flows::BkGradientSampler> sampler;
  if (is_abc) {
    for (int i = 0; i < d; ++i) pair.x2[i] = rng.uniform_in(0.0, kTwoPi);
    pair.x1 = add(pair.x2, s, d);
  } else {
    sampler = std::make_unique<flows::BkGradientSampler>(
        std::get<flows::BKFlowParams>(flow));
  }

  const bool track_adv = controller.wants_advantage();
  for (int k = 0; k < n_steps; ++k) {
    const double t = opts.t_offset + static_cast<double>(k) * cfg.dt;
    const agents::Controller::Action act = controller.act(s, t, rng);
    const double r = agents::reward(s, act.applied, cfg.beta, d);

    trace.times.push_back(t);
    trace.states.push_back(s);
    trace.actions.push_back(act.applied);
    trace.raw_actions.push_back(act.raw);
    trace.log_probs.push_back(act.log_prob);
    trace.rewards.push_back(r);
    if (act.has_log_prob) trace.has_log_probs = true;
    if (opts.vphi)
      trace.vphi.push_back(theory::physicist_value(norm(s, d), t, *opts.vphi));

    bool ok = true;
    Vec s_next = s;
    if (is_abc) {
      const auto res = flows::step_pair_abc(
          pair, act.applied, std::get<flows::ABCFlowParams>(flow), ic, rng);
      ok = res.ok;
      if (ok) {
        pair = res.pair;
        s_next = pair.separation(d);
      } else {
        s_next = res.pair.separation(d);
      }
    } else {
      const auto res = flows::step_separation_bk(
          s, act.applied, *sampler, std::get<flows::BKFlowParams>(flow), ic, rng);
      ok = res.ok;
      s_next = res.s;
    }

    if (track_adv && opts.vphi) {
      const double t_next = t + cfg.dt;
      const double v_curr = trace.vphi.back();
      const double v_next =
          ok ? theory::physicist_value(norm(s_next, d),
                                       std::min(t_next, opts.vphi->horizon),
                                       *opts.vphi)
             : theory::physicist_value(
                   std::min(norm(s_next, d), ic.max_sep),
                   std::min(t_next, opts.vphi->horizon), *opts.vphi);
      controller.post_step(
          agents::td_advantage(cfg.dt * r, v_next, v_curr, gamma));
    }

    if (!ok) {
      // Pessimistic completion: freeze at the abort state, zero action, the
      // abort-state reward for every remaining step.
      trace.aborted = true;
      trace.abort_step = k;
      Vec s_ab = s_next;
      if (!all_finite(s_ab, d)) s_ab = s;
      const double cap = ic.max_sep;
      const double n_ab = norm(s_ab, d);
      if (n_ab > cap && n_ab > 0.0) s_ab = scale(s_ab, cap / n_ab, d);
      const double r_fill = agents::reward(s_ab, zero_vec(), cfg.beta, d);
      for (int j = k + 1; j < n_steps; ++j) {
        const double tj = opts.t_offset + static_cast<double>(j) * cfg.dt;
        trace.times.push_back(tj);
        trace.states.push_back(s_ab);
        trace.actions.push_back(zero_vec());
        trace.raw_actions.push_back(zero_vec());
        trace.log_probs.push_back(0.0);
        trace.rewards.push_back(r_fill);
        if (opts.vphi)
          trace.vphi.push_back(
              theory::physicist_value(norm(s_ab, d), tj, *opts.vphi));
      }
      trace.final_state = s_ab;
      if (opts.vphi) trace.vphi.push_back(0.0);
      return trace;
    }
    s = s_next;
  }
  trace.final_state = s;
  if (opts.vphi) trace.vphi.push_back(0.0);  // B(T) = C(T) = 0
  return trace;
}

double discounted_return(const EpisodeTrace& trace, double gamma) {
  double g = 0.0;
  for (auto it = trace.rewards.rbegin(); it != trace.rewards.rend(); ++it)
    g = *it + gamma * g;
  return g;
}

double time_weighted_return(const EpisodeTrace& trace, double gamma, double dt) {
  return dt * discounted_return(trace, gamma);
}

agents::Batch build_batch_physicist(const EpisodeTrace& trace,
                                    const theory::BaselineParams& baseline,
                                    double dt, double gamma) {
  const int d = baseline.d;
  const std::size_t n =
      trace.aborted ? static_cast<std::size_t>(trace.abort_step) + 1
                    : trace.states.size();
  agents::Batch batch;
  batch.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const bool last = (k + 1 == trace.states.size());
    const Vec& s_next = last ? trace.final_state : trace.states[k + 1];
    const double t = trace.times[k];
    const double t_next = std::min(t + dt, baseline.horizon);
    const double v_curr =
        !trace.vphi.empty()
            ? trace.vphi[k]
            : theory::physicist_value(norm(trace.states[k], d), t, baseline);
    const double v_next =
        theory::physicist_value(norm(s_next, d), t_next, baseline);
    agents::Transition tr;
    tr.s = trace.states[k];
    tr.raw_action = trace.raw_actions[k];
    tr.log_prob_old = trace.log_probs[k];
    tr.advantage =
        agents::td_advantage(dt * trace.rewards[k], v_next, v_curr, gamma);
    tr.value_target = dt * trace.rewards[k] + gamma * v_next;
    batch.push_back(tr);
  }
  return batch;
}

agents::Batch build_batch_critic(const EpisodeTrace& trace,
                                 const agents::A2CAgent& agent, double dt,
                                 double gamma) {
  const std::size_t n =
      trace.aborted ? static_cast<std::size_t>(trace.abort_step) + 1
                    : trace.states.size();
  agents::Batch batch;
  batch.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const bool terminal = (k + 1 == trace.states.size());
    const Vec& s_next = terminal ? trace.final_state : trace.states[k + 1];
    const double v_curr = agent.value(trace.states[k]);
    const double v_next = terminal ? 0.0 : agent.value(s_next);
    agents::Transition tr;
    tr.s = trace.states[k];
    tr.raw_action = trace.raw_actions[k];
    tr.log_prob_old = trace.log_probs[k];
    tr.advantage =
        agents::td_advantage(dt * trace.rewards[k], v_next, v_curr, gamma);
    tr.value_target = dt * trace.rewards[k] + gamma * v_next;
    batch.push_back(tr);
  }
  return batch;
}

const agents::GaussianPolicy& policy_of(const AgentVariant& agent) {
  return std::visit(
      [](const auto& a) -> const agents::GaussianPolicy& {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, agents::APAgent>)
          return a.policy;
        else if constexpr (std::is_same_v<T, agents::A2CAgent>)
          return a.policy;
        else
          return a.ac.policy;
      },
      agent);
}

std::vector<double> evaluate(const FlowSpec& flow,
                             const ControllerFactory& make_controller,
                             const TrainConfig& cfg, int n_episodes,
                             const char* tag,
                             const theory::BaselineParams* vphi) {
  std::vector<double> returns(static_cast<std::size_t>(n_episodes), 0.0);
  const double gamma = cfg.gamma();
  parallel_for(static_cast<std::size_t>(n_episodes), cfg.workers,
               [&](std::size_t i) {
                 const std::unique_ptr<agents::Controller> ctrl =
                     make_controller();
                 RolloutOptions opts;
                 opts.stream_tag = tag;
                 opts.vphi = vphi;
                 const EpisodeTrace trace = rollout(flow, *ctrl, cfg, i, opts);
                 returns[i] = time_weighted_return(trace, gamma, cfg.dt);
               });
  return returns;
}

TrainResult train(AgentVariant& agent, const FlowSpec& flow,
                  const TrainConfig& cfg) {
  cfg.validate();
  TrainResult result;
  const double gamma = cfg.gamma();
  int consecutive_skips = 0;

  const theory::BaselineParams* baseline = nullptr;
  if (auto* ap = std::get_if<agents::APAgent>(&agent)) baseline = &ap->baseline;

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    agents::PolicyController ctrl(policy_of(agent), /*stochastic=*/true);
    RolloutOptions opts;
    opts.vphi = baseline;
    const EpisodeTrace trace =
        rollout(flow, ctrl, cfg, static_cast<std::uint64_t>(ep), opts);

    const auto status = std::visit(
        [&](auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, agents::APAgent>) {
            return agents::ap_update(
                a, build_batch_physicist(trace, a.baseline, cfg.dt, gamma));
          } else if constexpr (std::is_same_v<T, agents::A2CAgent>) {
            return agents::a2c_update(
                a, build_batch_critic(trace, a, cfg.dt, gamma));
          } else {
            return agents::ppo_update(
                a, build_batch_critic(trace, a.ac, cfg.dt, gamma));
          }
        },
        agent);

    if (status == nn::Optimizer::Status::skipped_non_finite) {
      ++result.skipped_updates;
      if (++consecutive_skips >= 10) {
        result.aborted = true;
        break;
      }
    } else {
      consecutive_skips = 0;
    }

    const agents::GaussianPolicy& pol = policy_of(agent);
    const std::vector<double> ev = evaluate(
        flow,
        [&pol] {
          return std::make_unique<agents::PolicyController>(pol, false);
        },
        cfg, cfg.eval_episodes, "eval");
    LearnPoint pt;
    pt.episode = ep;
    pt.mean_return = stats::mean(ev);
    pt.median_return = stats::median(ev);
    pt.stderr_mean = stats::stderr_of_mean(ev);
    result.curve.push_back(pt);
  }
  return result;
}

}  // namespace swimrl::training
