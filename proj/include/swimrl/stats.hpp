#pragma once
// Histogram and small-sample statistics shared by the theory fits and the
// experiment suites.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace swimrl::stats {

struct Histogram {
  std::vector<double> edges;   // size bins + 1
  std::vector<double> counts;  // size bins
  double total = 0.0;
  double below = 0.0;  // mass outside [edges.front(), edges.back())
  double above = 0.0;

  int bins() const { return static_cast<int>(counts.size()); }
  double center(int i) const { return 0.5 * (edges[i] + edges[i + 1]); }
  double width(int i) const { return edges[i + 1] - edges[i]; }
  // Geometric bin center, natural for log-spaced edges.
  double log_center(int i) const { return std::sqrt(edges[i] * edges[i + 1]); }

  // Probability density normalized over all recorded samples.
  double density(int i) const {
    const double n = total + below + above;
    return n > 0.0 ? counts[i] / (n * width(i)) : 0.0;
  }

  void add(double x, double weight = 1.0) {
    if (x < edges.front()) {
      below += weight;
      return;
    }
    if (x >= edges.back()) {
      above += weight;
      return;
    }
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    const int idx = static_cast<int>(it - edges.begin()) - 1;
    counts[idx] += weight;
    total += weight;
  }

  void merge(const Histogram& other) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    total += other.total;
    below += other.below;
    above += other.above;
  }

  static Histogram uniform(double lo, double hi, int bins) {
    Histogram h;
    h.edges.resize(bins + 1);
    for (int i = 0; i <= bins; ++i)
      h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / bins;
    h.counts.assign(bins, 0.0);
    return h;
  }

  static Histogram logspaced(double lo, double hi, int bins) {
    Histogram h;
    h.edges.resize(bins + 1);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i <= bins; ++i)
      h.edges[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / bins);
    h.counts.assign(bins, 0.0);
    return h;
  }
};

inline double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

inline double variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double stderr_of_mean(const std::vector<double>& xs) {
  return xs.empty() ? 0.0 : std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

// Quantile by linear interpolation on the sorted copy, q in [0, 1].
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

inline double median(const std::vector<double>& xs) { return quantile(xs, 0.5); }

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

// Weighted least squares line through (x_i, y_i) with weights w_i.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<double>& w) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  LineFit f;
  const double det = sw * sxx - sx * sx;
  if (det == 0.0 || sw == 0.0) return f;
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    chi2 += w[i] * r * r;
  }
  const double dof = std::max<double>(1.0, static_cast<double>(x.size()) - 2.0);
  f.slope_stderr = std::sqrt(std::max(chi2 / dof, 1.0) * sw / det);
  return f;
}

struct QuadFit {
  double a = 0.0;  // coefficient of x^2
  double b = 0.0;
  double c = 0.0;
  bool ok = false;
};

// Weighted least squares parabola y = a x^2 + b x + c via normal equations.
inline QuadFit fit_quadratic(const std::vector<double>& x,
                             const std::vector<double>& y,
                             const std::vector<double>& w) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, t0 = 0, t1 = 0, t2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i], wi = w[i];
    const double x2 = xi * xi;
    s0 += wi;
    s1 += wi * xi;
    s2 += wi * x2;
    s3 += wi * x2 * xi;
    s4 += wi * x2 * x2;
    t0 += wi * y[i];
    t1 += wi * xi * y[i];
    t2 += wi * x2 * y[i];
  }
  // Solve the 3x3 symmetric system [s4 s3 s2; s3 s2 s1; s2 s1 s0] (a b c)^T.
  const double m[9] = {s4, s3, s2, s3, s2, s1, s2, s1, s0};
  const double rhs[3] = {t2, t1, t0};
  const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) -
                     m[1] * (m[3] * m[8] - m[5] * m[6]) +
                     m[2] * (m[3] * m[7] - m[4] * m[6]);
  QuadFit f;
  if (std::abs(det) < 1e-300) return f;
  const double inv[9] = {
      (m[4] * m[8] - m[5] * m[7]) / det, (m[2] * m[7] - m[1] * m[8]) / det,
      (m[1] * m[5] - m[2] * m[4]) / det, (m[5] * m[6] - m[3] * m[8]) / det,
      (m[0] * m[8] - m[2] * m[6]) / det, (m[2] * m[3] - m[0] * m[5]) / det,
      (m[3] * m[7] - m[4] * m[6]) / det, (m[1] * m[6] - m[0] * m[7]) / det,
      (m[0] * m[4] - m[1] * m[3]) / det};
  f.a = inv[0] * rhs[0] + inv[1] * rhs[1] + inv[2] * rhs[2];
  f.b = inv[3] * rhs[0] + inv[4] * rhs[1] + inv[5] * rhs[2];
  f.c = inv[6] * rhs[0] + inv[7] * rhs[1] + inv[8] * rhs[2];
  f.ok = std::isfinite(f.a) && std::isfinite(f.b) && std::isfinite(f.c);
  return f;
}

}  // namespace swimrl::stats
