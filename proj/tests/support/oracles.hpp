#pragma once

// Reference computations used by the tests. Written from textbook formulas
// and kept independent of the library code they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_logpdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * kPi);
}

inline double cauchy_pdf(double x, double loc, double scale) {
  const double z = (x - loc) / scale;
  return 1.0 / (kPi * scale * (1.0 + z * z));
}

inline double student_t_pdf(double x, double mu, double sigma, double nu) {
  const double z = (x - mu) / sigma;
  const double c = std::exp(std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0)) / (std::sqrt(nu * kPi) * sigma);
  return c * std::pow(1.0 + z * z / nu, -(nu + 1.0) / 2.0);
}

// Kolmogorov distribution tail: P(sqrt(n) D > t).
inline double kolmogorov_tail(double t) {
  if (t < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

inline double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

// Asymptotic p-value with the Stephens small-sample correction.
inline double ks_pvalue(double d, double n) {
  const double sn = std::sqrt(n);
  return kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
}

inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = na * nb / (na + nb);
  return ks_pvalue(d, ne);
}

inline double mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// Type-7 sample quantile on a sorted copy.
inline double quantile(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline double median(const std::vector<double>& x) { return quantile(x, 0.5); }

// Composite Simpson rule over [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Posterior of mu under y_i ~ N(mu, sigma^2), mu ~ N(m0, s0^2).
struct NormalPosterior {
  double mean;
  double variance;
};

inline NormalPosterior conjugate_normal(const std::vector<double>& y, double sigma, double m0, double s0) {
  const double precision = 1.0 / (s0 * s0) + static_cast<double>(y.size()) / (sigma * sigma);
  const double sum = std::accumulate(y.begin(), y.end(), 0.0);
  return {(m0 / (s0 * s0) + sum / (sigma * sigma)) / precision, 1.0 / precision};
}

// Batch autocorrelation-robust standard error of a chain mean.
inline double batch_means_se(const std::vector<double>& x, std::size_t batches = 20) {
  const std::size_t len = x.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    means.push_back(std::accumulate(x.begin() + b * len, x.begin() + (b + 1) * len, 0.0) / len);
  }
  return std::sqrt(variance(means) / static_cast<double>(batches));
}

// Every k-th element. NUTS draws on a 1-d Gaussian have lag-1 correlation
// near 0.45 that decays geometrically, which makes KS tests on raw chains
// reject far more often than alpha; thinning by 5 restores calibration.
inline std::vector<double> thin(const std::vector<double>& x, std::size_t k) {
  std::vector<double> out;
  for (std::size_t i = 0; i < x.size(); i += k) out.push_back(x[i]);
  return out;
}

}  // namespace oracle
