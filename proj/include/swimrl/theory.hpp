#pragma once
// Analytic layer: finite-time Lyapunov statistics, the stationary separation
// density under proportional control, the optimal prescribed gain, and the
// closed-form value function used as the physicist baseline.

#include <vector>

#include "swimrl/flows.hpp"
#include "swimrl/stats.hpp"

namespace swimrl::theory {

// Finite-time statistics of the leading Lyapunov exponent. lambda_bar is the
// sample mean; s1_curv parameterizes the quadratic rate function
// S1(l) ~ S1(lb) + s1_curv (l - lb)^2 / 2, so the sample variance at window t
// is 1 / (s1_curv * t).
struct CramerFit {
  double lambda_bar = 0.0;
  double s1_curv = 0.0;
  bool curvature_ok = false;  // false when the histogram fit degenerated
  double t_window = 0.0;
  stats::Histogram histogram;
};

// Everything the closed-form value function needs.
struct BaselineParams {
  double phi = 0.0;      // prescribed gain, 1/time
  double d_tilde = 0.0;  // eddy diffusivity, 1/time
  double beta = 0.0;     // separation penalty weight
  double nu = 0.1;       // continuous discount, 1/time
  double horizon = 0.0;  // episode length T
  double kappa = 0.0;
  int d = 3;

  void validate() const;  // throws UnstableRegime when 2 phi <= d_tilde
};

struct TailPrediction {
  double exponent = 0.0;  // 2 (phi - lambda_bar) S1''; radial slope is -(1 + exponent)
  double s_d = 0.0;       // diffusive scale sqrt(kappa / lambda_bar)
};

// log(largest singular value of W) / (t - t0), renormalization included.
double finite_time_lyapunov(const flows::TangentState& tangent);

// Mean + curvature from a sample of finite-time exponents. The curvature is
// fitted by least squares of a parabola to -log(density)/t over the central
// region holding 80% of the histogram mass. Throws InsufficientSamples below
// 1000 samples. A zero-variance sample reports lambda_bar with
// curvature_ok = false.
CramerFit fit_cramer(const std::vector<double>& samples, double t_window,
                     int bins = 60);

// D_tilde = D (d+2)(d-1) for an exactly known BK amplitude.
double d_tilde_from_bk(double D, int d);

// D_tilde = 2 lambda_bar (1 + 2/d), the estimate used for general flows.
double d_tilde_from_lyapunov(double lambda_bar, int d);

// phi* = (D_tilde + sqrt(4 beta + D_tilde^2)) / 2, the argmin of
// (phi^2 + beta) / (2 phi - D_tilde).
double optimal_phi(double d_tilde, double beta);

// Stationary spherically-symmetric density P(s | phi) of the controlled BK
// separation, normalized so the radial density Omega_s P integrates to one.
// Throws UnboundedDistribution when phi <= d(d-1)D/2.
double stationary_density_bk(double s, const BaselineParams& params);

// Radial density Omega_s * P with Omega_s = (pi^{d/2} / Gamma(d/2+1)) s^{d-1}.
double radial_density_bk(double s, const BaselineParams& params);

// Asymptotic log-log slope of the radial density (exact BK expression).
double radial_tail_slope_bk(const BaselineParams& params);

// Predicted tail from measured Lyapunov statistics. Throws NoStationaryState
// when phi <= lambda_bar.
TailPrediction tail_exponent(double phi, const CramerFit& fit, double kappa);

// Coefficients of the value function V = -(B(t) s^2 + C(t)).
double value_b_coefficient(double t, const BaselineParams& params);
double value_c_coefficient(double t, const BaselineParams& params);

// Expected discounted reward accumulated from (t, |s| = s) to the horizon
// under prescribed control with the baseline's gain. Negative by convention:
// the closed form accumulates cost, the value of the reward is its negation.
double physicist_value(double s, double t, const BaselineParams& params);

}  // namespace swimrl::theory
