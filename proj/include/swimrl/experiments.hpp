#pragma once
// The experiment suites: Lyapunov statistics, stationary-distribution and
// value-function validation, and the controller comparisons.

#include <optional>

#include "swimrl/training.hpp"

namespace swimrl::training {

struct LyapunovResult {
  theory::CramerFit fit;
  double d_tilde = 0.0;
};

// Finite-time Lyapunov statistics from n_samples tangent evolutions over
// t_window. BK flows evolve the propagator directly from sampled gradient
// increments; ABC flows carry it along noisy passive trajectories.
LyapunovResult lyapunov_experiment(const FlowSpec& flow, double t_window,
                                   int n_samples, const TrainConfig& cfg);

struct HistogramConfig {
  int chains = 64;
  long steps_per_chain = 1'000'000;
  double burn_in_time = 100.0;
  int bins = 60;
  double range_lo_factor = 0.05;   // histogram range in units of s_d
  double range_hi_factor = 1000.0;
  double fit_lo_factor = 3.0;      // tail fit starts at 3 s_d
  double min_bin_count = 25.0;     // s_cut: last bin still holding this many
};

struct HistogramResult {
  stats::Histogram radial;  // counts of |s| over the stationary run
  double s_d = 0.0;
  double fitted_slope = 0.0;
  double fitted_slope_stderr = 0.0;
  double predicted_slope = 0.0;  // -(1 + 2 (phi - lambda_bar) S1'')
  theory::TailPrediction prediction;
  double fit_lo = 0.0, fit_hi = 0.0;
  int fit_bins = 0;
  double lambda_bar = 0.0, s1_curv = 0.0;  // statistics used for the prediction
};

// Long-run prescribed-control simulation and the log-log tail fit over
// [fit_lo_factor * s_d, s_cut]. BK predictions use the analytic Lyapunov
// statistics; ABC requires a measured CramerFit.
HistogramResult separation_histogram_experiment(
    const FlowSpec& flow, double phi, const TrainConfig& cfg,
    const HistogramConfig& hcfg,
    const theory::CramerFit* measured_fit = nullptr);

struct ValueGridConfig {
  std::vector<double> ts;
  std::vector<double> ss;
  int rollouts_per_point = 10'000;
};

struct ValuePoint {
  double t = 0.0, s = 0.0;
  double v_mc = 0.0, v_mc_stderr = 0.0;
  double v_phi = 0.0;
  double abs_err = 0.0, rel_err = 0.0;
};

struct ValueGridResult {
  std::vector<ValuePoint> points;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
};

// Monte Carlo discounted returns under prescribed control from each (t, s)
// grid point against the closed-form value.
ValueGridResult value_validation_experiment(const FlowSpec& flow,
                                            const theory::BaselineParams& baseline,
                                            const ValueGridConfig& gcfg,
                                            const TrainConfig& cfg);

struct AgentHyper {
  std::vector<int> hidden{64, 64};
  double log_std_init = -1.2039728043259361;  // log 0.3
  double a_max = 20.0;
  nn::OptimizerConfig actor_opt{};
  nn::OptimizerConfig critic_opt{.alpha = 1e-3};  // alpha_c
  double clip_eps = 0.2;
  int epochs = 4;
};

theory::BaselineParams make_baseline(const FlowSpec& flow, double phi,
                                     double d_tilde, const TrainConfig& cfg);

agents::GaussianPolicy make_policy(const FlowSpec& flow, const AgentHyper& hyper,
                                   const TrainConfig& cfg);

agents::APAgent make_ap_agent(const FlowSpec& flow, double phi, double d_tilde,
                              const TrainConfig& cfg, const AgentHyper& hyper);
agents::A2CAgent make_a2c_agent(const FlowSpec& flow, const TrainConfig& cfg,
                                const AgentHyper& hyper);
agents::PPOAgent make_ppo_agent(const FlowSpec& flow, const TrainConfig& cfg,
                                const AgentHyper& hyper);

struct CompareRow {
  double phi = 0.0;
  double pc_return = 0.0;
  double ap_return = 0.0;
  bool ap_wins = false;
};

// Trains one AP agent per gain (its baseline uses the benchmarked phi) and
// averages evaluation returns over n_states initial states for both
// controllers.
std::vector<CompareRow> pc_vs_ap_experiment(const FlowSpec& flow,
                                            const std::vector<double>& phis,
                                            double d_tilde,
                                            const TrainConfig& cfg,
                                            const AgentHyper& hyper,
                                            int n_states = 1000);

struct ReturnStats {
  std::vector<double> returns;
  double mean = 0.0;
  double median = 0.0;
  std::array<double, 5> quantiles{};  // 5%, 25%, 50%, 75%, 95%
  stats::Histogram hist;
};

ReturnStats make_return_stats(std::vector<double> returns, int bins = 40);

struct HybridParams {
  int window = 10;
  double threshold = 0.0;
};

struct ReturnDistResult {
  ReturnStats ap, pc, hybrid;
};

// Trains AP once, then evaluates AP, prescribed control, and the hybrid
// switch over the shared held-out episode set.
ReturnDistResult return_distribution_experiment(const FlowSpec& flow, double phi,
                                                double d_tilde,
                                                const TrainConfig& cfg,
                                                const AgentHyper& hyper,
                                                const HybridParams& hybrid);

struct HorizonRow {
  double horizon = 0.0;
  double ap_mean = 0.0;
  double pc_opt_mean = 0.0;
  double pc_sub_mean = 0.0;
};

// Evaluates the full-horizon-trained AP agent and the two prescribed gains
// on truncated horizons.
std::vector<HorizonRow> short_horizon_experiment(
    const FlowSpec& flow, const std::vector<double>& horizons, double phi_star,
    double phi_suboptimal, double d_tilde, const TrainConfig& cfg,
    const AgentHyper& hyper, int n_eval = 250);

}  // namespace swimrl::training
