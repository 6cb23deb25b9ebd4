#pragma once

#include <cstdint>
#include <limits>

#include "ltvstream/rng.hpp"

namespace ltvstream {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Location-scale Student-t. nu = 1 is Cauchy; nu = +inf is treated as the
// Gaussian limit by every function below.
struct StudentTParams {
  double mu = 0.0;
  double sigma = 1.0;
  double nu = 1.0;

  bool valid() const noexcept { return sigma > 0.0 && nu > 0.0; }
};

double logpdf_normal(double x, double mu, double sigma);
double logpdf_student_t(double x, const StudentTParams& p);
// -inf outside the support.
double logpdf_half_cauchy(double x, double scale);

// log Gamma((nu+1)/2) - log Gamma(nu/2) - log(nu*pi)/2, stable for large nu.
double student_t_log_normalizer(double nu);
// d/dnu of student_t_log_normalizer.
double student_t_log_normalizer_dnu(double nu);

struct StudentTGradient {
  double logp;
  double d_mu;
  double d_sigma;
  double d_nu;  // 0 in the Gaussian limit
};
StudentTGradient logpdf_student_t_grad(double x, const StudentTParams& p);

double sample_normal(double mu, double sigma, Rng& rng);
// mu + sigma * z / sqrt(g / nu), z ~ N(0,1), g ~ chi-square(nu).
double sample_student_t(const StudentTParams& p, Rng& rng);

struct TruncationStats {
  std::uint64_t draws = 0;
  std::uint64_t exhausted = 0;

  double exhaustion_rate() const noexcept {
    return draws ? static_cast<double>(exhausted) / static_cast<double>(draws) : 0.0;
  }
  TruncationStats& operator+=(const TruncationStats& o) noexcept {
    draws += o.draws;
    exhausted += o.exhausted;
    return *this;
  }
};

inline constexpr int kDefaultMaxTruncationAttempts = 100;

// Rejection sampling from Student-t restricted to [lower, inf). After
// max_attempts rejections the result is clamped to `lower` and the
// exhaustion counter is incremented.
double sample_truncated(const StudentTParams& p, double lower, int max_attempts, Rng& rng,
                        TruncationStats& stats);
double sample_truncated(const StudentTParams& p, double lower, int max_attempts, Rng& rng);

}  // namespace ltvstream
