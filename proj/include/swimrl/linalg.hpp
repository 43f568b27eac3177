#pragma once
// Small dense helpers for the d <= 3 flow state. Vec/Mat are fixed-capacity
// value types; the active dimension d travels with the flow parameters.

#include <array>
#include <cmath>
#include <cstddef>

namespace swimrl {

inline constexpr int kMaxDim = 3;

using Vec = std::array<double, kMaxDim>;      // first d entries used
using Mat = std::array<double, kMaxDim * kMaxDim>;  // row-major, packed by d

inline Vec zero_vec() { return {0.0, 0.0, 0.0}; }
inline Mat zero_mat() { return {}; }

inline Mat identity_mat(int d) {
  Mat m{};
  for (int i = 0; i < d; ++i) m[i * d + i] = 1.0;
  return m;
}

inline double dot(const Vec& a, const Vec& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a, int d) { return std::sqrt(dot(a, a, d)); }

inline Vec add(const Vec& a, const Vec& b, int d) {
  Vec r{};
  for (int i = 0; i < d; ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec sub(const Vec& a, const Vec& b, int d) {
  Vec r{};
  for (int i = 0; i < d; ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec scale(const Vec& a, double c, int d) {
  Vec r{};
  for (int i = 0; i < d; ++i) r[i] = c * a[i];
  return r;
}

inline Vec mat_vec(const Mat& m, const Vec& v, int d) {
  Vec r{};
  for (int i = 0; i < d; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += m[i * d + j] * v[j];
    r[i] = s;
  }
  return r;
}

inline Mat mat_mul(const Mat& a, const Mat& b, int d) {
  Mat r{};
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) {
      const double aik = a[i * d + k];
      for (int j = 0; j < d; ++j) r[i * d + j] += aik * b[k * d + j];
    }
  return r;
}

inline double trace(const Mat& m, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += m[i * d + i];
  return s;
}

inline double frobenius_norm(const Mat& m, int d) {
  double s = 0.0;
  for (int i = 0; i < d * d; ++i) s += m[i] * m[i];
  return std::sqrt(s);
}

inline bool all_finite(const Vec& v, int d) {
  for (int i = 0; i < d; ++i)
    if (!std::isfinite(v[i])) return false;
  return true;
}

// Cholesky factorization for symmetric positive *semi*definite matrices
// (n <= 9, row-major). Pivots below tol * max_diag are treated as exact
// zeros, which handles the rank-deficient trace mode of the gradient
// covariance. Returns false if a pivot is significantly negative.
template <std::size_t N>
bool psd_cholesky(const std::array<double, N>& a, int n,
                  std::array<double, N>& lower, double tol = 1e-12) {
  lower = {};
  double max_diag = 0.0;
  for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a[i * n + i]));
  const double cut = tol * (max_diag > 0.0 ? max_diag : 1.0);
  for (int j = 0; j < n; ++j) {
    double diag = a[j * n + j];
    for (int k = 0; k < j; ++k) diag -= lower[j * n + k] * lower[j * n + k];
    if (diag <= cut) {
      if (diag < -cut) return false;
      for (int i = j; i < n; ++i) lower[i * n + j] = 0.0;
      continue;
    }
    const double ljj = std::sqrt(diag);
    lower[j * n + j] = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (int k = 0; k < j; ++k) s -= lower[i * n + k] * lower[j * n + k];
      lower[i * n + j] = s / ljj;
    }
  }
  return true;
}

// Largest singular value of a d x d matrix via power iteration on W^T W.
// The iterate starts from a fixed deterministic direction; ties (e.g. the
// identity) are handled since any vector is then an eigenvector.
inline double largest_singular_value(const Mat& w, int d, int iters = 128) {
  Mat g{};  // W^T W
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += w[k * d + i] * w[k * d + j];
      g[i * d + j] = s;
    }
  Vec v{};
  for (int i = 0; i < d; ++i) v[i] = 1.0 / std::sqrt(static_cast<double>(d) + i);
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vec u = mat_vec(g, v, d);
    const double nu = norm(u, d);
    if (nu == 0.0) return 0.0;
    lambda = nu;
    v = scale(u, 1.0 / nu, d);
  }
  // One Rayleigh step sharpens the estimate.
  Vec u = mat_vec(g, v, d);
  lambda = dot(v, u, d);
  return std::sqrt(std::max(lambda, 0.0));
}

}  // namespace swimrl
