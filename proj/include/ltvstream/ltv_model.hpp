#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ltvstream/diff_core.hpp"
#include "ltvstream/distributions.hpp"
#include "ltvstream/encoder.hpp"
#include "ltvstream/nuts.hpp"
#include "ltvstream/rng.hpp"
#include "ltvstream/scaler.hpp"

namespace ltvstream {

enum class Likelihood { student_t, gaussian };

Likelihood parse_likelihood(std::string_view name);
std::string_view to_string(Likelihood likelihood);

// Hierarchical regression of the (scaled) target on one categorical feature.
// Location, scale and (Student-t only) degrees of freedom each get a
// Horseshoe-shrunk per-category effect:
//   mu(c)    = base_mu + effect_mu[c]
//   sigma(c) = exp(base_log_sigma) + |effect_sigma[c]|
//   nu(c)    = exp(base_log_df) + |effect_df[c]|
//   effect[c] = z[c] * lambda[c] * tau,  z ~ N(0,1), lambda ~ HalfCauchy(1), tau ~ HalfCauchy(tau0)
struct ModelSpec {
  Likelihood likelihood = Likelihood::student_t;
  std::size_t category_capacity = kDefaultCategoryCapacity;
  double base_mu_scale = 2.0;      // Normal prior sd on base_mu
  double sigma_prior_scale = 1.0;  // HalfCauchy scale on exp(base_log_sigma)
  double df_prior_scale = 5.0;     // HalfCauchy scale on exp(base_log_df)
  // Global Horseshoe scales. Defaults: 1 / capacity for location and scale
  // effects, df_prior_scale / capacity for degrees-of-freedom effects.
  std::optional<double> tau0;
  std::optional<double> df_tau0;
  bool per_category_sigma = true;

  void validate() const;
  double location_tau0() const;
  double degrees_tau0() const;
};

struct EffectBlock {
  bool present = false;
  std::size_t z = 0;
  std::size_t log_lambda = 0;
  std::size_t log_tau = 0;
};

// Flat parameter layout, in order:
//   base_mu, base_log_sigma, [base_log_df],
//   mu_z[C], [sigma_z[C]], [df_z[C]],
//   mu_log_lambda[C], [sigma_log_lambda[C]], [df_log_lambda[C]],
//   mu_log_tau, [sigma_log_tau], [df_log_tau]
// Bracketed blocks exist only for the Student-t model / per-category sigma.
struct ParamLayout {
  explicit ParamLayout(const ModelSpec& spec);

  std::size_t capacity = 0;
  std::size_t dimension = 0;
  std::size_t base_mu = 0;
  std::size_t base_log_sigma = 1;
  std::optional<std::size_t> base_log_df;
  EffectBlock mu;
  EffectBlock sigma;
  EffectBlock df;

  std::vector<std::string> names() const;
};

struct ObservationRow {
  CategoryCode category_code = kUnknownCode;
  double target_scaled = 0.0;
};

// Student-t parameters in scaled-target units; nu is +inf for the Gaussian model.
using CategoryParams = StudentTParams;

class LtvModel {
 public:
  explicit LtvModel(ModelSpec spec);

  const ModelSpec& spec() const noexcept { return spec_; }
  const ParamLayout& layout() const noexcept { return layout_; }
  std::size_t dimension() const noexcept { return layout_.dimension; }

  // Unnormalized log posterior given one batch. Throws ConfigError on an
  // empty batch or a code outside the capacity.
  DensityGraph build_density(std::span<const ObservationRow> batch) const;

  CategoryParams category_params(std::span<const double> theta, CategoryCode code) const;

  ParamVector sample_prior(Rng& rng) const;
  ParamVector initial_position(Rng& rng) const;

 private:
  ModelSpec spec_;
  ParamLayout layout_;
};

// s predictive draws per row, row-major (rows x draws).
struct DrawMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
};

struct PosteriorBatch {
  DrawMatrix predictive;   // truncated at 0, target units
  DrawMatrix log_density;  // untruncated log p(y_i | theta_s), target units
  std::vector<CategoryParams> row_means;  // posterior means of (mu, sigma, nu), target units
  TruncationStats truncation;

  std::size_t footprint_bytes() const noexcept;
};

// For every row and every draw: compose the row's (mu, sigma, nu), map it to
// target units through `scaling`, draw one predictive value truncated below
// at `lower` and evaluate the untruncated log density of the row's actual
// target. Rows carry targets scaled with the same `scaling`.
PosteriorBatch posterior_predictive(const LtvModel& model, const SampleChain& draws,
                                    std::span<const ObservationRow> rows, const AffineMap& scaling, Rng& rng,
                                    double lower = 0.0, int max_attempts = kDefaultMaxTruncationAttempts);

struct DfSummary {
  CategoryCode code = 0;
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  // The interval is lopsided around the median (expected: the df prior is
  // asymmetric by design).
  bool asymmetric = false;
};

// Posterior of nu(c) = exp(base_log_df) + |effect_df[c]| for codes
// [0, num_codes). Percentile intervals, not HPD: the df prior is asymmetric.
// Throws ConfigError for the Gaussian model.
std::vector<DfSummary> fat_tail_report(const SampleChain& draws, const LtvModel& model, std::size_t num_codes);

// Delimited table: category,code,mean,sd,median,q5,q95,asymmetric.
void write_fat_tail_report(std::ostream& os, const std::vector<DfSummary>& report, const EncodingTable& names);

}  // namespace ltvstream
