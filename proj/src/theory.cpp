#include "swimrl/theory.hpp"

#include <algorithm>
#include <cmath>

#include "swimrl/errors.hpp"

namespace swimrl::theory {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

// BK amplitude implied by the stored eddy diffusivity.
double bk_amplitude(const BaselineParams& p) {
  return p.d_tilde / ((p.d + 2) * (p.d - 1));
}
}  // namespace

void BaselineParams::validate() const {
  if (d != 2 && d != 3) throw ConfigError("baseline: d must be 2 or 3");
  if (!(nu > 0.0)) throw ConfigError("baseline: nu must be > 0");
  if (!(horizon > 0.0)) throw ConfigError("baseline: horizon must be > 0");
  if (!(kappa >= 0.0)) throw ConfigError("baseline: kappa must be >= 0");
  if (!(beta >= 0.0)) throw ConfigError("baseline: beta must be >= 0");
  if (!(2.0 * phi > d_tilde))
    throw UnstableRegime("baseline requires 2 phi > D_tilde");
}

double finite_time_lyapunov(const flows::TangentState& tangent) {
  const double window = tangent.t - tangent.t0;
  if (!(window > 0.0))
    throw DegenerateWindow("finite_time_lyapunov: t must exceed t0");
  const double sv = largest_singular_value(tangent.W, tangent.d);
  return (std::log(sv) + tangent.log_renorm) / window;
}

CramerFit fit_cramer(const std::vector<double>& samples, double t_window,
                     int bins) {
  if (samples.size() < 1000)
    throw InsufficientSamples("fit_cramer needs at least 1000 samples");
  if (!(t_window > 0.0)) throw ConfigError("fit_cramer: t_window must be > 0");

  CramerFit fit;
  fit.t_window = t_window;
  fit.lambda_bar = stats::mean(samples);

  std::vector<double> sorted(samples);
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front(), hi = sorted.back();
  if (!(hi > lo)) {
    // Zero-variance input: the mean is still meaningful, the curvature not.
    fit.histogram = stats::Histogram::uniform(lo - 0.5, lo + 0.5, bins);
    for (double x : samples) fit.histogram.add(x);
    fit.s1_curv = 0.0;
    fit.curvature_ok = false;
    return fit;
  }

  const double pad = 1e-9 * (hi - lo);
  fit.histogram = stats::Histogram::uniform(lo - pad, hi + pad, bins);
  for (double x : samples) fit.histogram.add(x);

  // Central region holding 80% of the mass.
  const auto pick = [&](double q) {
    const std::size_t idx = static_cast<std::size_t>(
        q * static_cast<double>(sorted.size() - 1));
    return sorted[idx];
  };
  const double c_lo = pick(0.10), c_hi = pick(0.90);

  std::vector<double> xs, ys, ws;
  for (int i = 0; i < fit.histogram.bins(); ++i) {
    const double c = fit.histogram.center(i);
    if (c < c_lo || c > c_hi) continue;
    const double n = fit.histogram.counts[i];
    if (n <= 0.0) continue;
    xs.push_back(c);
    ys.push_back(-std::log(fit.histogram.density(i)) / t_window);
    ws.push_back(n);  // Poisson-ish weighting
  }
  const stats::QuadFit q = stats::fit_quadratic(xs, ys, ws);
  // y ~ (l - lb)^2 S1''/2 + const, so the quadratic coefficient is S1''/2.
  fit.s1_curv = 2.0 * q.a;
  fit.curvature_ok = q.ok && xs.size() >= 5 && fit.s1_curv > 0.0;
  return fit;
}

double d_tilde_from_bk(double D, int d) {
  if (!(D >= 0.0)) throw ConfigError("d_tilde_from_bk: D must be >= 0");
  return D * (d + 2) * (d - 1);
}

double d_tilde_from_lyapunov(double lambda_bar, int d) {
  if (!(lambda_bar >= 0.0))
    throw ConfigError("d_tilde_from_lyapunov: lambda_bar must be >= 0");
  return 2.0 * lambda_bar * (1.0 + 2.0 / static_cast<double>(d));
}

double optimal_phi(double d_tilde, double beta) {
  if (!(d_tilde >= 0.0) || !(beta >= 0.0) || (d_tilde == 0.0 && beta == 0.0))
    throw ConfigError("optimal_phi: need d_tilde >= 0, beta >= 0, not both 0");
  return 0.5 * (d_tilde + std::sqrt(4.0 * beta + d_tilde * d_tilde));
}

double stationary_density_bk(double s, const BaselineParams& p) {
  const double D = bk_amplitude(p);
  const int d = p.d;
  const double lambda_bar = 0.5 * d * (d - 1) * D;
  if (!(p.phi > lambda_bar))
    throw UnboundedDistribution(
        "stationary density requires phi > d(d-1)D/2");
  if (!(p.kappa > 0.0))
    throw ConfigError("stationary density requires kappa > 0");
  const double pexp = p.phi / (D * (d - 1));
  const double a = (d - 1) * D / p.kappa;
  // N = (pi kappa / ((d-1) D))^{d/2} Gamma(p - d/2) / (d Gamma(p))
  const double log_n = 0.5 * d * std::log(kPi / a) + std::lgamma(pexp - 0.5 * d) -
                       std::log(static_cast<double>(d)) - std::lgamma(pexp);
  return std::exp(-log_n - pexp * std::log1p(a * s * s));
}

double radial_density_bk(double s, const BaselineParams& p) {
  const int d = p.d;
  const double omega = std::pow(kPi, 0.5 * d) /
                       std::tgamma(0.5 * d + 1.0) * std::pow(s, d - 1);
  return omega * stationary_density_bk(s, p);
}

double radial_tail_slope_bk(const BaselineParams& p) {
  const double D = bk_amplitude(p);
  return (p.d - 1) - 2.0 * p.phi / (D * (p.d - 1));
}

TailPrediction tail_exponent(double phi, const CramerFit& fit, double kappa) {
  if (!(phi > fit.lambda_bar))
    throw NoStationaryState("tail_exponent requires phi > lambda_bar");
  TailPrediction t;
  t.exponent = 2.0 * (phi - fit.lambda_bar) * fit.s1_curv;
  t.s_d = fit.lambda_bar > 0.0 ? std::sqrt(kappa / fit.lambda_bar) : 0.0;
  return t;
}

double value_b_coefficient(double t, const BaselineParams& p) {
  p.validate();
  const double left = p.horizon - t;
  const double rate = p.nu + 2.0 * p.phi - p.d_tilde;
  return (p.beta + p.phi * p.phi) * (-std::expm1(-left * rate)) / rate;
}

double value_c_coefficient(double t, const BaselineParams& p) {
  p.validate();
  const double left = p.horizon - t;
  const double gap = 2.0 * p.phi - p.d_tilde;
  const double dk = p.d * p.kappa;
  const double b = value_b_coefficient(t, p);
  return dk * (p.beta + p.phi * p.phi) * (-std::expm1(-p.nu * left)) /
             (p.nu * gap) -
         dk * b / gap;
}

double physicist_value(double s, double t, const BaselineParams& p) {
  if (t < 0.0 || t > p.horizon)
    throw ConfigError("physicist_value: t outside [0, T]");
  return -(value_b_coefficient(t, p) * s * s + value_c_coefficient(t, p));
}

}  // namespace swimrl::theory
