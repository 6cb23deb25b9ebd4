#include "ltvstream/distributions.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ltvstream {

namespace {

constexpr double kLogPi = 1.14472988584940017414;

// Above this nu the Student-t normalizer is evaluated through its asymptotic
// expansion; boost's ratio is exact below it.
constexpr double kLargeNu = 1e12;

}  // namespace

double logpdf_normal(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - kLogSqrt2Pi;
}

double student_t_log_normalizer(double nu) {
  if (!std::isfinite(nu)) return -kLogSqrt2Pi;
  const double half = 0.5 * nu;
  double log_ratio;  // log Gamma(half + 1/2) - log Gamma(half)
  if (nu < kLargeNu) {
    log_ratio = -std::log(boost::math::tgamma_delta_ratio(half, 0.5));
  } else {
    log_ratio = 0.5 * std::log(half) - 1.0 / (8.0 * half);
  }
  return log_ratio - 0.5 * (std::log(nu) + kLogPi);
}

double student_t_log_normalizer_dnu(double nu) {
  if (!std::isfinite(nu)) return 0.0;
  const double half = 0.5 * nu;
  double dpsi;  // digamma(half + 1/2) - digamma(half)
  if (half > 1e6) {
    const double inv = 1.0 / half;
    dpsi = 0.5 * inv + 0.125 * inv * inv;
  } else {
    dpsi = boost::math::digamma(half + 0.5) - boost::math::digamma(half);
  }
  return 0.5 * dpsi - 0.5 / nu;
}

double logpdf_student_t(double x, const StudentTParams& p) {
  if (!std::isfinite(p.nu)) return logpdf_normal(x, p.mu, p.sigma);
  const double z = (x - p.mu) / p.sigma;
  return student_t_log_normalizer(p.nu) - std::log(p.sigma) -
         0.5 * (p.nu + 1.0) * std::log1p(z * z / p.nu);
}

StudentTGradient logpdf_student_t_grad(double x, const StudentTParams& p) {
  const double r = x - p.mu;
  const double s2 = p.sigma * p.sigma;
  if (!std::isfinite(p.nu)) {
    return {logpdf_normal(x, p.mu, p.sigma), r / s2, -1.0 / p.sigma + r * r / (s2 * p.sigma), 0.0};
  }
  const double r2 = r * r;
  const double a = p.nu * s2 + r2;
  const double log1p_term = std::log1p(r2 / (p.nu * s2));
  StudentTGradient g{};
  g.logp = student_t_log_normalizer(p.nu) - std::log(p.sigma) - 0.5 * (p.nu + 1.0) * log1p_term;
  g.d_mu = (p.nu + 1.0) * r / a;
  g.d_sigma = -1.0 / p.sigma + (p.nu + 1.0) * r2 / (p.sigma * a);
  g.d_nu = student_t_log_normalizer_dnu(p.nu) - 0.5 * log1p_term + 0.5 * (p.nu + 1.0) * r2 / (p.nu * a);
  return g;
}

double logpdf_half_cauchy(double x, double scale) {
  if (x < 0.0) return -kInf;
  const double z = x / scale;
  return std::log(2.0 / (std::numbers::pi * scale)) - std::log1p(z * z);
}

double sample_normal(double mu, double sigma, Rng& rng) { return mu + sigma * rng.normal(); }

double sample_student_t(const StudentTParams& p, Rng& rng) {
  const double z = rng.normal();
  if (!std::isfinite(p.nu)) return p.mu + p.sigma * z;
  const double g = rng.chi_square(p.nu);
  return p.mu + p.sigma * z / std::sqrt(g / p.nu);
}

double sample_truncated(const StudentTParams& p, double lower, int max_attempts, Rng& rng,
                        TruncationStats& stats) {
  if (max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  ++stats.draws;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const double x = sample_student_t(p, rng);
    if (x >= lower) return x;
  }
  ++stats.exhausted;
  return lower;
}

double sample_truncated(const StudentTParams& p, double lower, int max_attempts, Rng& rng) {
  TruncationStats unused;
  return sample_truncated(p, lower, max_attempts, rng, unused);
}

}  // namespace ltvstream
