#include "ltvstream/ltv_model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <ostream>
#include <string>

#include "ltvstream/data_io.hpp"
#include "ltvstream/errors.hpp"
#include "ltvstream/evaluation.hpp"

namespace ltvstream {

namespace {

// log HalfCauchy(exp(u); scale) + u, and its derivative in u.
struct LogScaleTerm {
  double value;
  double d_u;
};

LogScaleTerm half_cauchy_on_log(double u, double scale) {
  const double x = std::exp(u);
  const double ratio = x / scale;
  const double r2 = ratio * ratio;
  return {std::log(2.0 / (std::numbers::pi * scale)) - std::log1p(r2) + u, 1.0 - 2.0 * r2 / (1.0 + r2)};
}

double sample_half_cauchy(double scale, Rng& rng) {
  return scale * std::tan(0.5 * std::numbers::pi * rng.uniform_open());
}

struct CategoryRows {
  CategoryCode code = 0;
  std::vector<double> targets;
  double mean = 0.0;  // for the Gaussian likelihood
  double m2 = 0.0;
};

struct EffectValue {
  double value;
  double lambda;
  double tau;
};

EffectValue effect_at(std::span<const double> theta, const EffectBlock& block, CategoryCode code) {
  const double lambda = std::exp(theta[block.log_lambda + code]);
  const double tau = std::exp(theta[block.log_tau]);
  return {theta[block.z + code] * lambda * tau, lambda, tau};
}

// Chains dL/d(effect) into z, log_lambda and log_tau.
void push_effect_gradient(std::span<double> grad, const EffectBlock& block, CategoryCode code, const EffectValue& e,
                          double d_effect) {
  grad[block.z + code] += d_effect * e.lambda * e.tau;
  grad[block.log_lambda + code] += d_effect * e.value;
  grad[block.log_tau] += d_effect * e.value;
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

Likelihood parse_likelihood(std::string_view name) {
  if (name == "student_t") return Likelihood::student_t;
  if (name == "gaussian") return Likelihood::gaussian;
  throw ConfigError("model", "expected 'student_t' or 'gaussian', got '" + std::string(name) + "'");
}

std::string_view to_string(Likelihood likelihood) {
  return likelihood == Likelihood::student_t ? "student_t" : "gaussian";
}

void ModelSpec::validate() const {
  if (category_capacity < 1) throw ConfigError("capacity", "must be at least 1");
  if (!(base_mu_scale > 0.0)) throw ConfigError("base_mu_scale", "must be positive");
  if (!(sigma_prior_scale > 0.0)) throw ConfigError("sigma_prior_scale", "must be positive");
  if (!(df_prior_scale > 0.0)) throw ConfigError("df_prior_scale", "must be positive");
  if (tau0 && !(*tau0 > 0.0)) throw ConfigError("tau0", "must be positive");
  if (df_tau0 && !(*df_tau0 > 0.0)) throw ConfigError("df_tau0", "must be positive");
}

double ModelSpec::location_tau0() const {
  return tau0.value_or(1.0 / static_cast<double>(category_capacity));
}

double ModelSpec::degrees_tau0() const {
  return df_tau0.value_or(df_prior_scale / static_cast<double>(category_capacity));
}

ParamLayout::ParamLayout(const ModelSpec& spec) : capacity(spec.category_capacity) {
  const bool student = spec.likelihood == Likelihood::student_t;
  std::size_t next = 2;
  if (student) base_log_df = next++;
  mu.present = true;
  sigma.present = spec.per_category_sigma;
  df.present = student;
  for (EffectBlock* b : {&mu, &sigma, &df}) {
    if (b->present) {
      b->z = next;
      next += capacity;
    }
  }
  for (EffectBlock* b : {&mu, &sigma, &df}) {
    if (b->present) {
      b->log_lambda = next;
      next += capacity;
    }
  }
  for (EffectBlock* b : {&mu, &sigma, &df}) {
    if (b->present) b->log_tau = next++;
  }
  dimension = next;
}

std::vector<std::string> ParamLayout::names() const {
  std::vector<std::string> out(dimension);
  out[base_mu] = "base_mu";
  out[base_log_sigma] = "base_log_sigma";
  if (base_log_df) out[*base_log_df] = "base_log_df";
  const std::pair<const EffectBlock*, const char*> blocks[] = {{&mu, "mu"}, {&sigma, "sigma"}, {&df, "df"}};
  for (const auto& [block, prefix] : blocks) {
    if (!block->present) continue;
    for (std::size_t c = 0; c < capacity; ++c) {
      out[block->z + c] = std::string(prefix) + "_z[" + std::to_string(c) + "]";
      out[block->log_lambda + c] = std::string(prefix) + "_log_lambda[" + std::to_string(c) + "]";
    }
    out[block->log_tau] = std::string(prefix) + "_log_tau";
  }
  return out;
}

LtvModel::LtvModel(ModelSpec spec) : spec_(std::move(spec)), layout_((spec_.validate(), spec_)) {}

DensityGraph LtvModel::build_density(std::span<const ObservationRow> batch) const {
  if (batch.empty()) throw ConfigError("batch", "cannot build a density from an empty batch");
  std::vector<std::ptrdiff_t> slot(spec_.category_capacity, -1);
  auto groups = std::make_shared<std::vector<CategoryRows>>();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const ObservationRow& row = batch[i];
    if (row.category_code >= spec_.category_capacity) {
      throw ConfigError("category_code", "row " + std::to_string(i) + " has code " +
                                             std::to_string(row.category_code) + " outside capacity " +
                                             std::to_string(spec_.category_capacity));
    }
    if (!std::isfinite(row.target_scaled)) {
      throw ConfigError("target", "row " + std::to_string(i) + " has a non-finite target");
    }
    if (slot[row.category_code] < 0) {
      slot[row.category_code] = static_cast<std::ptrdiff_t>(groups->size());
      groups->push_back(CategoryRows{row.category_code, {}, 0.0, 0.0});
    }
    (*groups)[static_cast<std::size_t>(slot[row.category_code])].targets.push_back(row.target_scaled);
  }
  for (CategoryRows& g : *groups) {
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (double y : g.targets) {
      ++n;
      const double delta = y - mean;
      mean += delta / static_cast<double>(n);
      m2 += delta * (y - mean);
    }
    g.mean = mean;
    g.m2 = m2;
  }

  const ModelSpec spec = spec_;
  const ParamLayout layout = layout_;
  auto kernel = [spec, layout, groups](std::span<const double> theta, std::span<double> grad) -> double {
    std::fill(grad.begin(), grad.end(), 0.0);
    const bool student = spec.likelihood == Likelihood::student_t;
    double lp = 0.0;

    const double base_mu = theta[layout.base_mu];
    lp += -0.5 * (base_mu / spec.base_mu_scale) * (base_mu / spec.base_mu_scale);
    grad[layout.base_mu] += -base_mu / (spec.base_mu_scale * spec.base_mu_scale);

    const LogScaleTerm sigma_prior = half_cauchy_on_log(theta[layout.base_log_sigma], spec.sigma_prior_scale);
    lp += sigma_prior.value;
    grad[layout.base_log_sigma] += sigma_prior.d_u;
    const double base_sigma = std::exp(theta[layout.base_log_sigma]);

    double base_df = kInf;
    if (student) {
      const LogScaleTerm df_prior = half_cauchy_on_log(theta[*layout.base_log_df], spec.df_prior_scale);
      lp += df_prior.value;
      grad[*layout.base_log_df] += df_prior.d_u;
      base_df = std::exp(theta[*layout.base_log_df]);
    }

    const std::pair<const EffectBlock*, double> blocks[] = {
        {&layout.mu, spec.location_tau0()}, {&layout.sigma, spec.location_tau0()}, {&layout.df, spec.degrees_tau0()}};
    for (const auto& [block, tau0] : blocks) {
      if (!block->present) continue;
      const LogScaleTerm tau_prior = half_cauchy_on_log(theta[block->log_tau], tau0);
      lp += tau_prior.value;
      grad[block->log_tau] += tau_prior.d_u;
      for (std::size_t c = 0; c < layout.capacity; ++c) {
        const double z = theta[block->z + c];
        lp += -0.5 * z * z - kLogSqrt2Pi;
        grad[block->z + c] += -z;
        const LogScaleTerm lambda_prior = half_cauchy_on_log(theta[block->log_lambda + c], 1.0);
        lp += lambda_prior.value;
        grad[block->log_lambda + c] += lambda_prior.d_u;
      }
    }

    for (const CategoryRows& g : *groups) {
      const EffectValue e_mu = effect_at(theta, layout.mu, g.code);
      const double mu = base_mu + e_mu.value;
      EffectValue e_sigma{0.0, 0.0, 0.0};
      double sigma = base_sigma;
      if (layout.sigma.present) {
        e_sigma = effect_at(theta, layout.sigma, g.code);
        sigma += std::abs(e_sigma.value);
      }
      const double n = static_cast<double>(g.targets.size());

      double d_mu, d_sigma, d_nu = 0.0;
      EffectValue e_df{0.0, 0.0, 0.0};
      if (student) {
        e_df = effect_at(theta, layout.df, g.code);
        const double nu = base_df + std::abs(e_df.value);
        const double nu_s2 = nu * sigma * sigma;
        const double inv_nu_s2 = 1.0 / nu_s2;
        // sum of log(1 + r^2 / (nu sigma^2)): multiply the factors and take
        // a log only when the running product gets large.
        double sum_log1p = 0.0, product = 1.0, sum_rw = 0.0, sum_r2w = 0.0;
        for (double y : g.targets) {
          const double r = y - mu;
          const double r2 = r * r;
          const double w = 1.0 / (nu_s2 + r2);
          product *= 1.0 + r2 * inv_nu_s2;
          if (product > 1e100) {
            sum_log1p += std::log(product);
            product = 1.0;
          }
          sum_rw += r * w;
          sum_r2w += r2 * w;
        }
        sum_log1p += std::log(product);
        lp += n * (student_t_log_normalizer(nu) - std::log(sigma)) - 0.5 * (nu + 1.0) * sum_log1p;
        d_mu = (nu + 1.0) * sum_rw;
        d_sigma = -n / sigma + (nu + 1.0) * sum_r2w / sigma;
        d_nu = n * student_t_log_normalizer_dnu(nu) - 0.5 * sum_log1p + 0.5 * (nu + 1.0) * sum_r2w / nu;
      } else {
        const double offset = g.mean - mu;
        const double ss = g.m2 + n * offset * offset;
        const double s2 = sigma * sigma;
        lp += -n * (std::log(sigma) + kLogSqrt2Pi) - 0.5 * ss / s2;
        d_mu = n * offset / s2;
        d_sigma = -n / sigma + ss / (s2 * sigma);
      }

      grad[layout.base_mu] += d_mu;
      push_effect_gradient(grad, layout.mu, g.code, e_mu, d_mu);
      grad[layout.base_log_sigma] += d_sigma * base_sigma;
      if (layout.sigma.present) {
        push_effect_gradient(grad, layout.sigma, g.code, e_sigma, d_sigma * sign_of(e_sigma.value));
      }
      if (student) {
        grad[*layout.base_log_df] += d_nu * base_df;
        push_effect_gradient(grad, layout.df, g.code, e_df, d_nu * sign_of(e_df.value));
      }
    }
    return lp;
  };
  return DensityGraph(layout_.dimension, std::move(kernel));
}

CategoryParams LtvModel::category_params(std::span<const double> theta, CategoryCode code) const {
  if (code >= spec_.category_capacity) throw ConfigError("category_code", "outside capacity");
  CategoryParams p;
  p.mu = theta[layout_.base_mu] + effect_at(theta, layout_.mu, code).value;
  p.sigma = std::exp(theta[layout_.base_log_sigma]);
  if (layout_.sigma.present) p.sigma += std::abs(effect_at(theta, layout_.sigma, code).value);
  if (layout_.base_log_df) {
    p.nu = std::exp(theta[*layout_.base_log_df]) + std::abs(effect_at(theta, layout_.df, code).value);
  } else {
    p.nu = kInf;
  }
  return p;
}

ParamVector LtvModel::sample_prior(Rng& rng) const {
  ParamVector theta(layout_.dimension, 0.0);
  theta[layout_.base_mu] = spec_.base_mu_scale * rng.normal();
  theta[layout_.base_log_sigma] = std::log(sample_half_cauchy(spec_.sigma_prior_scale, rng));
  if (layout_.base_log_df) theta[*layout_.base_log_df] = std::log(sample_half_cauchy(spec_.df_prior_scale, rng));
  const std::pair<const EffectBlock*, double> blocks[] = {{&layout_.mu, spec_.location_tau0()},
                                                          {&layout_.sigma, spec_.location_tau0()},
                                                          {&layout_.df, spec_.degrees_tau0()}};
  for (const auto& [block, tau0] : blocks) {
    if (!block->present) continue;
    theta[block->log_tau] = std::log(sample_half_cauchy(tau0, rng));
    for (std::size_t c = 0; c < layout_.capacity; ++c) {
      theta[block->z + c] = rng.normal();
      theta[block->log_lambda + c] = std::log(sample_half_cauchy(1.0, rng));
    }
  }
  return theta;
}

ParamVector LtvModel::initial_position(Rng& rng) const {
  auto jitter = [&rng] { return rng.uniform() - 0.5; };
  ParamVector theta(layout_.dimension, 0.0);
  theta[layout_.base_mu] = jitter();
  theta[layout_.base_log_sigma] = jitter();
  if (layout_.base_log_df) theta[*layout_.base_log_df] = std::log(spec_.df_prior_scale) + jitter();
  const std::pair<const EffectBlock*, double> blocks[] = {{&layout_.mu, spec_.location_tau0()},
                                                          {&layout_.sigma, spec_.location_tau0()},
                                                          {&layout_.df, spec_.degrees_tau0()}};
  for (const auto& [block, tau0] : blocks) {
    if (!block->present) continue;
    theta[block->log_tau] = std::log(tau0) + jitter();
    for (std::size_t c = 0; c < layout_.capacity; ++c) {
      theta[block->z + c] = jitter();
      theta[block->log_lambda + c] = jitter();
    }
  }
  return theta;
}

std::size_t PosteriorBatch::footprint_bytes() const noexcept {
  return sizeof(*this) + (predictive.values.size() + log_density.values.size()) * sizeof(double) +
         row_means.size() * sizeof(CategoryParams);
}

PosteriorBatch posterior_predictive(const LtvModel& model, const SampleChain& draws,
                                    std::span<const ObservationRow> rows, const AffineMap& scaling, Rng& rng,
                                    double lower, int max_attempts) {
  const std::size_t num_draws = draws.size();
  if (num_draws == 0) throw ConfigError("draws", "posterior predictive needs at least one draw");
  if (draws.dimension != model.dimension()) throw ConfigError("draws", "chain dimension does not match model");
  const std::size_t capacity = model.spec().category_capacity;

  std::vector<char> used(capacity, 0);
  for (const ObservationRow& r : rows) {
    if (r.category_code >= capacity) throw ConfigError("category_code", "outside capacity");
    used[r.category_code] = 1;
  }
  std::vector<CategoryCode> codes;
  for (std::size_t c = 0; c < capacity; ++c) {
    if (used[c]) codes.push_back(static_cast<CategoryCode>(c));
  }

  const double spread = std::max(scaling.spread, kSpreadFloor);
  const double log_spread = std::log(spread);

  PosteriorBatch out;
  out.predictive = {rows.size(), num_draws, std::vector<double>(rows.size() * num_draws)};
  out.log_density = {rows.size(), num_draws, std::vector<double>(rows.size() * num_draws)};
  out.row_means.assign(rows.size(), CategoryParams{0.0, 0.0, 0.0});

  struct Cached {
    StudentTParams target_units;  // mapped to target units
    double log_norm;
    double log_sigma;
  };
  std::vector<Cached> cache(capacity);
  std::vector<CategoryParams> code_sum(capacity, CategoryParams{0.0, 0.0, 0.0});

  for (std::size_t s = 0; s < num_draws; ++s) {
    const auto theta = draws.draw(s);
    for (CategoryCode c : codes) {
      const CategoryParams p = model.category_params(theta, c);
      const StudentTParams u{scaling.center + spread * p.mu, spread * p.sigma, p.nu};
      cache[c] = {u, student_t_log_normalizer(p.nu), std::log(p.sigma)};
      code_sum[c].mu += u.mu;
      code_sum[c].sigma += u.sigma;
      code_sum[c].nu += p.nu;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Cached& k = cache[rows[i].category_code];
      out.predictive.values[i * num_draws + s] = sample_truncated(k.target_units, lower, max_attempts, rng,
                                                                  out.truncation);
      // Density of the scaled target under the scaled parameters, then the
      // change of variables back to target units.
      const double mu_scaled = (k.target_units.mu - scaling.center) / spread;
      const double z = (rows[i].target_scaled - mu_scaled) / (k.target_units.sigma / spread);
      double logp;
      if (std::isfinite(k.target_units.nu)) {
        logp = k.log_norm - k.log_sigma - 0.5 * (k.target_units.nu + 1.0) * std::log1p(z * z / k.target_units.nu);
      } else {
        logp = -kLogSqrt2Pi - k.log_sigma - 0.5 * z * z;
      }
      out.log_density.values[i * num_draws + s] = logp - log_spread;
    }
  }
  const double inv = 1.0 / static_cast<double>(num_draws);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const CategoryParams& sum = code_sum[rows[i].category_code];
    out.row_means[i] = {sum.mu * inv, sum.sigma * inv, sum.nu * inv};
  }
  return out;
}

std::vector<DfSummary> fat_tail_report(const SampleChain& draws, const LtvModel& model, std::size_t num_codes) {
  if (model.spec().likelihood != Likelihood::student_t) {
    throw ConfigError("model", "degrees-of-freedom report requires the Student-t likelihood");
  }
  if (draws.size() == 0) throw ConfigError("draws", "degrees-of-freedom report needs at least one draw");
  num_codes = std::min(num_codes, model.spec().category_capacity);
  std::vector<DfSummary> report;
  report.reserve(num_codes);
  std::vector<double> values(draws.size());
  for (std::size_t c = 0; c < num_codes; ++c) {
    for (std::size_t s = 0; s < draws.size(); ++s) {
      values[s] = model.category_params(draws.draw(s), static_cast<CategoryCode>(c)).nu;
    }
    DfSummary row;
    row.code = static_cast<CategoryCode>(c);
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    row.mean = mean;
    row.sd = values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&sorted](double q) {
      const double pos = q * static_cast<double>(sorted.size() - 1);
      const auto lo = static_cast<std::size_t>(pos);
      const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
      return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    row.median = quantile(0.5);
    row.q05 = quantile(0.05);
    row.q95 = quantile(0.95);
    const double upper = row.q95 - row.median, lower = row.median - row.q05;
    row.asymmetric = std::abs(upper - lower) > 0.1 * (row.q95 - row.q05);
    report.push_back(row);
  }
  return report;
}

void write_fat_tail_report(std::ostream& os, const std::vector<DfSummary>& report, const EncodingTable& names) {
  os << "category,code,mean,sd,median,q5,q95,asymmetric\n";
  for (const DfSummary& r : report) {
    std::string name = "<unknown>";
    for (const auto& [value, code] : names) {
      if (code == r.code) name = value;
    }
    os << escape_field(name) << ',' << r.code << ',' << format_double(r.mean) << ',' << format_double(r.sd) << ','
       << format_double(r.median) << ',' << format_double(r.q05) << ',' << format_double(r.q95) << ','
       << (r.asymmetric ? 1 : 0) << '\n';
  }
}

}  // namespace ltvstream
