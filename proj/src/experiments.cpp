#include "swimrl/experiments.hpp"

#include <cmath>

#include "swimrl/errors.hpp"
#include "swimrl/parallel.hpp"

namespace swimrl::training {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

theory::CramerFit analytic_bk_fit(const flows::BKFlowParams& bk) {
  theory::CramerFit fit;
  fit.lambda_bar = 0.5 * bk.d * (bk.d - 1) * bk.D;
  fit.s1_curv = 1.0 / ((bk.d - 1) * bk.D);
  fit.curvature_ok = true;
  return fit;
}
}  // namespace

LyapunovResult lyapunov_experiment(const FlowSpec& flow, double t_window,
                                   int n_samples, const TrainConfig& cfg) {
  if (n_samples < 1000)
    throw InsufficientSamples("lyapunov_experiment needs >= 1000 samples");
  const int d = flow_dim(flow);
  const long n_steps = std::lround(t_window / cfg.dt);
  std::vector<double> lambdas(static_cast<std::size_t>(n_samples), 0.0);

  if (const auto* bk = std::get_if<flows::BKFlowParams>(&flow)) {
    const flows::BkGradientSampler sampler(*bk);
    parallel_for(lambdas.size(), cfg.workers, [&](std::size_t i) {
      Rng rng(child_seed(cfg.master_seed, "lyapunov", i));
      flows::TangentState w = flows::TangentState::identity(d);
      for (long k = 0; k < n_steps; ++k)
        flows::evolve_tangent(w, sampler.sample(cfg.dt, rng), cfg.dt);
      lambdas[i] = theory::finite_time_lyapunov(w);
    });
  } else {
    const auto& abc = std::get<flows::ABCFlowParams>(flow);
    const double noise = std::sqrt(0.5 * abc.kappa * cfg.dt);
    parallel_for(lambdas.size(), cfg.workers, [&](std::size_t i) {
      Rng rng(child_seed(cfg.master_seed, "lyapunov", i));
      Vec x{rng.uniform_in(0.0, kTwoPi), rng.uniform_in(0.0, kTwoPi),
            rng.uniform_in(0.0, kTwoPi)};
      flows::TangentState w = flows::TangentState::identity(d);
      for (long k = 0; k < n_steps; ++k) {
        Mat sigma_dt = flows::abc_jacobian(abc, x);
        for (double& v : sigma_dt) v *= cfg.dt;
        flows::evolve_tangent(w, sigma_dt, cfg.dt);
        const Vec v = flows::abc_velocity(abc, x);
        for (int c = 0; c < d; ++c)
          x[c] += v[c] * cfg.dt + noise * rng.normal();
      }
      lambdas[i] = theory::finite_time_lyapunov(w);
    });
  }

  LyapunovResult out;
  out.fit = theory::fit_cramer(lambdas, t_window);
  out.d_tilde = theory::d_tilde_from_lyapunov(out.fit.lambda_bar, d);
  return out;
}

HistogramResult separation_histogram_experiment(
    const FlowSpec& flow, double phi, const TrainConfig& cfg,
    const HistogramConfig& hcfg, const theory::CramerFit* measured_fit) {
  const int d = flow_dim(flow);
  const double kappa = flow_kappa(flow);

  theory::CramerFit fit;
  if (const auto* bk = std::get_if<flows::BKFlowParams>(&flow)) {
    fit = measured_fit ? *measured_fit : analytic_bk_fit(*bk);
  } else {
    if (!measured_fit)
      throw ConfigError(
          "ABC histogram experiment needs measured Lyapunov statistics");
    fit = *measured_fit;
  }
  const theory::TailPrediction pred = theory::tail_exponent(phi, fit, kappa);
  const double s_d = pred.s_d;

  HistogramResult out;
  out.s_d = s_d;
  out.prediction = pred;
  out.predicted_slope = -(1.0 + pred.exponent);
  out.lambda_bar = fit.lambda_bar;
  out.s1_curv = fit.s1_curv;
  out.radial = stats::Histogram::logspaced(hcfg.range_lo_factor * s_d,
                                           hcfg.range_hi_factor * s_d, hcfg.bins);

  const flows::IntegratorConfig ic = cfg.integrator(flow);
  const long burn_steps = std::lround(hcfg.burn_in_time / cfg.dt);
  std::vector<stats::Histogram> partial(static_cast<std::size_t>(hcfg.chains),
                                        out.radial);

  const bool is_abc = std::holds_alternative<flows::ABCFlowParams>(flow);
  parallel_for(partial.size(), cfg.workers, [&](std::size_t c) {
    Rng rng(child_seed(cfg.master_seed, "histogram", c));
    stats::Histogram& h = partial[c];
    const auto init_sep = [&](Vec& s) {
      for (int i = 0; i < d; ++i) s[i] = s_d * rng.normal();
    };
    if (is_abc) {
      const auto& abc = std::get<flows::ABCFlowParams>(flow);
      flows::PairState pair;
      Vec s;
      init_sep(s);
      for (int i = 0; i < d; ++i) pair.x2[i] = rng.uniform_in(0.0, kTwoPi);
      pair.x1 = add(pair.x2, s, d);
      for (long k = -burn_steps; k < hcfg.steps_per_chain; ++k) {
        s = pair.separation(d);
        const Vec a = agents::prescribed_action(s, phi, d);
        const auto res = flows::step_pair_abc(pair, a, abc, ic, rng);
        if (!res.ok) {  // restart the chain near the diffusive scale
          init_sep(s);
          for (int i = 0; i < d; ++i) pair.x2[i] = rng.uniform_in(0.0, kTwoPi);
          pair.x1 = add(pair.x2, s, d);
          continue;
        }
        pair = res.pair;
        if (k >= 0) h.add(norm(pair.separation(d), d));
      }
    } else {
      const auto& bk = std::get<flows::BKFlowParams>(flow);
      const flows::BkGradientSampler sampler(bk);
      Vec s;
      init_sep(s);
      for (long k = -burn_steps; k < hcfg.steps_per_chain; ++k) {
        const Vec a = agents::prescribed_action(s, phi, d);
        const auto res = flows::step_separation_bk(s, a, sampler, bk, ic, rng);
        if (!res.ok) {
          init_sep(s);
          continue;
        }
        s = res.s;
        if (k >= 0) h.add(norm(s, d));
      }
    }
  });
  for (const stats::Histogram& h : partial) out.radial.merge(h);

  // Tail fit of log(density) vs log(s) over [fit_lo_factor s_d, s_cut].
  const double fit_lo = hcfg.fit_lo_factor * s_d;
  std::vector<double> xs, ys, ws;
  double fit_hi = fit_lo;
  for (int i = 0; i < out.radial.bins(); ++i) {
    const double c = out.radial.log_center(i);
    if (c < fit_lo) continue;
    if (out.radial.counts[i] < hcfg.min_bin_count) break;
    xs.push_back(std::log(c));
    ys.push_back(std::log(out.radial.density(i)));
    ws.push_back(out.radial.counts[i]);
    fit_hi = out.radial.edges[i + 1];
  }
  out.fit_lo = fit_lo;
  out.fit_hi = fit_hi;
  out.fit_bins = static_cast<int>(xs.size());
  if (out.fit_bins >= 3) {
    const stats::LineFit lf = stats::fit_line(xs, ys, ws);
    out.fitted_slope = lf.slope;
    out.fitted_slope_stderr = lf.slope_stderr;
  } else {
    throw NoStationaryState(
        "separation histogram: tail region beyond 3 s_d holds too few "
        "samples for a slope fit");
  }
  return out;
}

ValueGridResult value_validation_experiment(const FlowSpec& flow,
                                            const theory::BaselineParams& baseline,
                                            const ValueGridConfig& gcfg,
                                            const TrainConfig& cfg) {
  baseline.validate();
  ValueGridResult out;
  const double gamma = cfg.gamma();
  const int d = flow_dim(flow);
  std::uint64_t point_index = 0;
  for (double t : gcfg.ts) {
    for (double s0 : gcfg.ss) {
      const int steps =
          static_cast<int>(std::lround((cfg.horizon() - t) / cfg.dt));
      std::vector<double> returns(
          static_cast<std::size_t>(gcfg.rollouts_per_point), 0.0);
      if (steps > 0) {
        parallel_for(returns.size(), cfg.workers, [&](std::size_t i) {
          Rng dir_rng(child_seed(cfg.master_seed, "value-dir",
                                 point_index * 1000003ull + i));
          Vec s0_vec = zero_vec();
          double n2 = 0.0;
          for (int c = 0; c < d; ++c) {
            s0_vec[c] = dir_rng.normal();
            n2 += s0_vec[c] * s0_vec[c];
          }
          const double nrm = std::sqrt(n2);
          for (int c = 0; c < d; ++c) s0_vec[c] *= (nrm > 0 ? s0 / nrm : 0.0);
          agents::PcController pc(baseline.phi, d);
          RolloutOptions opts;
          opts.stream_tag = "value-mc";
          opts.fixed_s0 = &s0_vec;
          opts.steps_override = steps;
          const EpisodeTrace tr =
              rollout(flow, pc, cfg, point_index * 1000003ull + i, opts);
          returns[i] = time_weighted_return(tr, gamma, cfg.dt);
        });
      }
      ValuePoint pt;
      pt.t = t;
      pt.s = s0;
      pt.v_mc = stats::mean(returns);
      pt.v_mc_stderr = stats::stderr_of_mean(returns);
      pt.v_phi = theory::physicist_value(s0, t, baseline);
      pt.abs_err = std::abs(pt.v_mc - pt.v_phi);
      pt.rel_err = pt.abs_err == 0.0 ? 0.0 : pt.abs_err / std::abs(pt.v_phi);
      out.max_rel_err = std::max(out.max_rel_err, pt.rel_err);
      out.max_abs_err = std::max(out.max_abs_err, pt.abs_err);
      out.points.push_back(pt);
      ++point_index;
    }
  }
  return out;
}

theory::BaselineParams make_baseline(const FlowSpec& flow, double phi,
                                     double d_tilde, const TrainConfig& cfg) {
  theory::BaselineParams bp;
  bp.phi = phi;
  bp.d_tilde = d_tilde;
  bp.beta = cfg.beta;
  bp.nu = cfg.nu;
  bp.horizon = cfg.horizon();
  bp.kappa = flow_kappa(flow);
  bp.d = flow_dim(flow);
  bp.validate();
  return bp;
}

agents::GaussianPolicy make_policy(const FlowSpec& flow, const AgentHyper& hyper,
                                   const TrainConfig& cfg) {
  Rng rng(child_seed(cfg.master_seed, "policy-init", 0));
  agents::GaussianPolicy pol = agents::GaussianPolicy::make(
      flow_dim(flow), hyper.hidden, hyper.log_std_init, rng);
  pol.a_max = hyper.a_max;
  return pol;
}

agents::APAgent make_ap_agent(const FlowSpec& flow, double phi, double d_tilde,
                              const TrainConfig& cfg, const AgentHyper& hyper) {
  return agents::APAgent::make(make_policy(flow, hyper, cfg),
                               make_baseline(flow, phi, d_tilde, cfg),
                               hyper.actor_opt);
}

agents::A2CAgent make_a2c_agent(const FlowSpec& flow, const TrainConfig& cfg,
                                const AgentHyper& hyper) {
  Rng rng(child_seed(cfg.master_seed, "critic-init", 0));
  return agents::A2CAgent::make(make_policy(flow, hyper, cfg), hyper.hidden,
                                hyper.actor_opt, hyper.critic_opt, rng);
}

agents::PPOAgent make_ppo_agent(const FlowSpec& flow, const TrainConfig& cfg,
                                const AgentHyper& hyper) {
  agents::PPOAgent ppo{make_a2c_agent(flow, cfg, hyper), hyper.clip_eps,
                       hyper.epochs};
  return ppo;
}

std::vector<CompareRow> pc_vs_ap_experiment(const FlowSpec& flow,
                                            const std::vector<double>& phis,
                                            double d_tilde,
                                            const TrainConfig& cfg,
                                            const AgentHyper& hyper,
                                            int n_states) {
  std::vector<CompareRow> rows;
  const int d = flow_dim(flow);
  for (double phi : phis) {
    AgentVariant agent = make_ap_agent(flow, phi, d_tilde, cfg, hyper);
    train(agent, flow, cfg);
    const agents::GaussianPolicy& pol = policy_of(agent);
    const std::vector<double> ap = evaluate(
        flow,
        [&pol] { return std::make_unique<agents::PolicyController>(pol, false); },
        cfg, n_states, "compare");
    const std::vector<double> pc = evaluate(
        flow,
        [phi, d] { return std::make_unique<agents::PcController>(phi, d); },
        cfg, n_states, "compare");
    CompareRow row;
    row.phi = phi;
    row.ap_return = stats::mean(ap);
    row.pc_return = stats::mean(pc);
    row.ap_wins = row.ap_return > row.pc_return;
    rows.push_back(row);
  }
  return rows;
}

ReturnStats make_return_stats(std::vector<double> returns, int bins) {
  ReturnStats st;
  st.mean = stats::mean(returns);
  st.median = stats::median(returns);
  st.quantiles = {stats::quantile(returns, 0.05), stats::quantile(returns, 0.25),
                  stats::quantile(returns, 0.50), stats::quantile(returns, 0.75),
                  stats::quantile(returns, 0.95)};
  double lo = returns.empty() ? 0.0 : returns.front();
  double hi = lo;
  for (double r : returns) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (!(hi > lo)) hi = lo + 1.0;
  st.hist = stats::Histogram::uniform(lo, hi + 1e-12 * (hi - lo), bins);
  for (double r : returns) st.hist.add(r);
  st.returns = std::move(returns);
  return st;
}

ReturnDistResult return_distribution_experiment(const FlowSpec& flow, double phi,
                                                double d_tilde,
                                                const TrainConfig& cfg,
                                                const AgentHyper& hyper,
                                                const HybridParams& hybrid) {
  AgentVariant agent = make_ap_agent(flow, phi, d_tilde, cfg, hyper);
  train(agent, flow, cfg);
  const agents::APAgent& ap = std::get<agents::APAgent>(agent);
  const int d = flow_dim(flow);
  const int n = cfg.final_eval_episodes;

  const std::vector<double> ap_returns = evaluate(
      flow,
      [&ap] {
        return std::make_unique<agents::PolicyController>(ap.policy, false);
      },
      cfg, n, "dist");
  const std::vector<double> pc_returns = evaluate(
      flow,
      [phi, d] { return std::make_unique<agents::PcController>(phi, d); },
      cfg, n, "dist");

  struct HybridEval final : agents::Controller {
    agents::HybridController ctrl;
    explicit HybridEval(agents::HybridController c) : ctrl(std::move(c)) {}
    Action act(const Vec& s, double, Rng&) override {
      Action a;
      a.applied = ctrl.use_fallback()
                      ? agents::prescribed_action(s, ctrl.fallback_phi,
                                                  ctrl.policy.d)
                      : ctrl.policy.mean_action(s);
      a.raw = a.applied;
      return a;
    }
    void post_step(double adv) override { ctrl.record_advantage(adv); }
    bool wants_advantage() const override { return true; }
  };
  agents::HybridController proto{ap.policy, ap.baseline, phi, hybrid.window,
                                 hybrid.threshold, {}};
  const std::vector<double> hy_returns = evaluate(
      flow, [&proto] { return std::make_unique<HybridEval>(proto); }, cfg, n,
      "dist", &ap.baseline);

  ReturnDistResult out;
  out.ap = make_return_stats(ap_returns);
  out.pc = make_return_stats(pc_returns);
  out.hybrid = make_return_stats(hy_returns);
  return out;
}

std::vector<HorizonRow> short_horizon_experiment(
    const FlowSpec& flow, const std::vector<double>& horizons, double phi_star,
    double phi_suboptimal, double d_tilde, const TrainConfig& cfg,
    const AgentHyper& hyper, int n_eval) {
  AgentVariant agent = make_ap_agent(flow, phi_star, d_tilde, cfg, hyper);
  train(agent, flow, cfg);
  const agents::GaussianPolicy& pol = policy_of(agent);
  const int d = flow_dim(flow);

  std::vector<HorizonRow> rows;
  for (double h : horizons) {
    TrainConfig ecfg = cfg;
    ecfg.steps = std::max(1, static_cast<int>(std::lround(h / cfg.dt)));
    HorizonRow row;
    row.horizon = ecfg.steps * cfg.dt;
    row.ap_mean = stats::mean(evaluate(
        flow,
        [&pol] { return std::make_unique<agents::PolicyController>(pol, false); },
        ecfg, n_eval, "short"));
    row.pc_opt_mean = stats::mean(evaluate(
        flow,
        [phi_star, d] {
          return std::make_unique<agents::PcController>(phi_star, d);
        },
        ecfg, n_eval, "short"));
    row.pc_sub_mean = stats::mean(evaluate(
        flow,
        [phi_suboptimal, d] {
          return std::make_unique<agents::PcController>(phi_suboptimal, d);
        },
        ecfg, n_eval, "short"));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace swimrl::training
