#include "swimrl/flows.hpp"

#include <cmath>

#include "swimrl/errors.hpp"

namespace swimrl::flows {

void BKFlowParams::validate() const {
  if (!(D >= 0.0)) throw ConfigError("BK flow: D must be >= 0");
  if (!(kappa >= 0.0)) throw ConfigError("BK flow: kappa must be >= 0");
  if (d != 2 && d != 3) throw ConfigError("BK flow: d must be 2 or 3");
}

void ABCFlowParams::validate() const {
  if (!(kappa > 0.0)) throw ConfigError("ABC flow: kappa must be > 0");
}

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("integrator: dt must be > 0");
  if (!(max_sep > 0.0)) throw ConfigError("integrator: max_sep must be > 0");
}

BkGradientSampler::BkGradientSampler(const BKFlowParams& params) : d_(params.d) {
  params.validate();
  const int d = d_;
  const int n = d * d;
  // Unit-dt covariance C[(ij),(kl)] = D (d+1) delta_ik delta_jl
  //                                 - D (delta_ij delta_kl + delta_jk delta_il).
  std::array<double, 81> cov{};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          const int row = i * d + j, col = k * d + l;
          double c = 0.0;
          if (i == k && j == l) c += params.D * (d + 1);
          if (i == j && k == l) c -= params.D;
          if (j == k && i == l) c -= params.D;
          cov[row * n + col] = c;
        }
  if (!psd_cholesky(cov, n, chol_))
    throw ConfigError("BK gradient covariance is not positive semidefinite");
}

Mat BkGradientSampler::sample(double dt, Rng& rng) const {
  const int n = d_ * d_;
  std::array<double, 9> g{};
  for (int i = 0; i < n; ++i) g[i] = rng.normal();
  const double sq = std::sqrt(dt);
  Mat m{};
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j <= i; ++j) s += chol_[i * n + j] * g[j];
    m[i] = sq * s;
  }
  return m;
}

Mat sample_bk_gradient(const BKFlowParams& params, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw ConfigError("sample_bk_gradient: dt must be > 0");
  return BkGradientSampler(params).sample(dt, rng);
}

Vec abc_velocity(const ABCFlowParams& p, const Vec& pos) {
  const double x = pos[0], y = pos[1], z = pos[2];
  return Vec{p.A * std::sin(z) + p.C * std::cos(y),
             p.B * std::sin(x) + p.A * std::cos(z),
             p.C * std::sin(y) + p.B * std::cos(x)};
}

Mat abc_jacobian(const ABCFlowParams& p, const Vec& pos) {
  const double x = pos[0], y = pos[1], z = pos[2];
  Mat j{};
  // row-major d = 3
  j[0] = 0.0;
  j[1] = -p.C * std::sin(y);
  j[2] = p.A * std::cos(z);
  j[3] = p.B * std::cos(x);
  j[4] = 0.0;
  j[5] = -p.A * std::sin(z);
  j[6] = -p.B * std::sin(x);
  j[7] = p.C * std::cos(y);
  j[8] = 0.0;
  return j;
}

StepResult step_separation_bk(const Vec& s, const Vec& action,
                              const BkGradientSampler& sampler,
                              const BKFlowParams& params,
                              const IntegratorConfig& cfg, Rng& rng) {
  const int d = params.d;
  const Mat m = sampler.sample(cfg.dt, rng);
  const double noise = std::sqrt(params.kappa * cfg.dt);
  StepResult out;
  for (int i = 0; i < d; ++i) {
    double v = s[i] - action[i] * cfg.dt;
    for (int j = 0; j < d; ++j) v += m[i * d + j] * s[j];
    if (noise > 0.0) v += noise * rng.normal();
    out.s[i] = v;
  }
  if (!all_finite(out.s, d) || norm(out.s, d) > cfg.max_sep) out.ok = false;
  return out;
}

StepResult step_separation_bk(const SeparationState& state, const Vec& action,
                              const BKFlowParams& params,
                              const IntegratorConfig& cfg, Rng& rng) {
  const BkGradientSampler sampler(params);
  return step_separation_bk(state.s, action, sampler, params, cfg, rng);
}

PairStepResult step_pair_abc(const PairState& pair, const Vec& action,
                             const ABCFlowParams& params,
                             const IntegratorConfig& cfg, Rng& rng) {
  constexpr int d = ABCFlowParams::d;
  const Vec v1 = abc_velocity(params, pair.x1);
  const Vec v2 = abc_velocity(params, pair.x2);
  const double noise = std::sqrt(0.5 * params.kappa * cfg.dt);
  PairStepResult out;
  for (int i = 0; i < d; ++i) {
    out.pair.x1[i] =
        pair.x1[i] + (v1[i] - action[i]) * cfg.dt + noise * rng.normal();
    out.pair.x2[i] = pair.x2[i] + v2[i] * cfg.dt + noise * rng.normal();
  }
  const Vec s = out.pair.separation(d);
  if (!all_finite(out.pair.x1, d) || !all_finite(out.pair.x2, d) ||
      norm(s, d) > cfg.max_sep)
    out.ok = false;
  return out;
}

void evolve_tangent(TangentState& tangent, const Mat& sigma_dt, double dt) {
  const int d = tangent.d;
  Mat step = sigma_dt;
  for (int i = 0; i < d; ++i) step[i * d + i] += 1.0;
  tangent.W = mat_mul(step, tangent.W, d);
  tangent.t += dt;
  const double f = frobenius_norm(tangent.W, d);
  if (f > 1e120 || (f > 0.0 && f < 1e-120)) {
    const double inv = 1.0 / f;
    for (int i = 0; i < d * d; ++i) tangent.W[i] *= inv;
    tangent.log_renorm += std::log(f);
  }
}

}  // namespace swimrl::flows
