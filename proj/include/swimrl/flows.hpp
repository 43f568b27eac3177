#pragma once
// Environment dynamics: the delta-correlated Gaussian gradient sampler, the
// steady ABC field, and Euler-Maruyama integration of the separation and its
// tangent propagator.

#include <array>
#include <cstdint>

#include "swimrl/linalg.hpp"
#include "swimrl/rng.hpp"

namespace swimrl::flows {

struct BKFlowParams {
  double D = 0.0;      // eddy-diffusivity amplitude, 1/time
  int d = 3;           // spatial dimension, 2 or 3
  double kappa = 0.0;  // thermal-noise variance, length^2/time

  void validate() const;  // throws ConfigError on bad ranges
};

struct ABCFlowParams {
  double A = 1.0;
  double B = 0.7;
  double C = 0.43;
  double kappa = 1e-4;  // per-pair separation noise variance

  static constexpr int d = 3;
  void validate() const;
};

struct SeparationState {
  Vec s = zero_vec();
};

struct PairState {
  Vec x1 = zero_vec();  // active particle
  Vec x2 = zero_vec();  // passive target
  Vec separation(int d) const { return sub(x1, x2, d); }
};

// Tangent propagator W(t; t0) with W(t0; t0) = I. The running log of any
// renormalization applied to keep the entries in range is accumulated so
// stretching statistics stay exact.
struct TangentState {
  Mat W;
  int d = 3;
  double t0 = 0.0;
  double t = 0.0;
  double log_renorm = 0.0;

  static TangentState identity(int d, double t0 = 0.0) {
    return TangentState{identity_mat(d), d, t0, t0, 0.0};
  }
};

struct IntegratorConfig {
  double dt = 1e-2;
  double max_sep = 1e3;  // abort threshold; 2*pi recommended for ABC

  void validate() const;
};

inline constexpr double kAbcMaxSep = 6.283185307179586;  // 2*pi validity edge

// Samples the gradient increment M = sigma * dt for one step. The covariance
// of the unit-dt increment is built once as a d^2 x d^2 matrix and Cholesky
// factorized; sampling is a linear transform of iid Gaussians, so the trace
// mode carries exactly zero variance.
class BkGradientSampler {
 public:
  explicit BkGradientSampler(const BKFlowParams& params);

  Mat sample(double dt, Rng& rng) const;

  int dim() const { return d_; }

 private:
  int d_;
  std::array<double, 81> chol_{};  // factor of the unit-dt covariance
};

// One-shot convenience wrapper around BkGradientSampler.
Mat sample_bk_gradient(const BKFlowParams& params, double dt, Rng& rng);

// Deterministic part of the ABC field at a position (d = 3).
Vec abc_velocity(const ABCFlowParams& params, const Vec& pos);

// Analytic Jacobian of abc_velocity; trace is identically zero.
Mat abc_jacobian(const ABCFlowParams& params, const Vec& pos);

struct StepResult {
  Vec s = zero_vec();
  bool ok = true;  // false: overflow / non-finite, episode must abort
};

// Euler-Maruyama step of ds = sigma s dt - a dt + sqrt(kappa dt) g using a
// freshly sampled gradient increment.
StepResult step_separation_bk(const SeparationState& state, const Vec& action,
                              const BKFlowParams& params,
                              const IntegratorConfig& cfg, Rng& rng);

// Hot-path variant reusing a prepared sampler.
StepResult step_separation_bk(const Vec& s, const Vec& action,
                              const BkGradientSampler& sampler,
                              const BKFlowParams& params,
                              const IntegratorConfig& cfg, Rng& rng);

struct PairStepResult {
  PairState pair;
  bool ok = true;
};

// Advects both particles through the ABC field with independent per-particle
// noise of variance kappa/2 per component, so the separation noise variance
// is kappa. The control enters the active particle with a minus sign.
PairStepResult step_pair_abc(const PairState& pair, const Vec& action,
                             const ABCFlowParams& params,
                             const IntegratorConfig& cfg, Rng& rng);

// W <- (I + sigma_dt) W, renormalizing when the entries leave [1e-120, 1e120].
void evolve_tangent(TangentState& tangent, const Mat& sigma_dt, double dt);

}  // namespace swimrl::flows
