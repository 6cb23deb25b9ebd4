#include "ltvstream/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "ltvstream/errors.hpp"

namespace ltvstream {

RowViews row_views(const DrawMatrix& m) {
  RowViews out;
  out.reserve(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out.push_back(m.row(i));
  return out;
}

LppdResult lppd(const RowViews& predictive_log_densities) {
  LppdResult result;
  for (std::size_t i = 0; i < predictive_log_densities.size(); ++i) {
    const auto row = predictive_log_densities[i];
    if (row.empty()) throw ConfigError("lppd", "row " + std::to_string(i) + " has no draws");
    const double hi = *std::max_element(row.begin(), row.end());
    if (hi == -std::numeric_limits<double>::infinity()) {
      result.neg_inf_rows.push_back(i);
      result.total = -std::numeric_limits<double>::infinity();
      continue;
    }
    double acc = 0.0;
    for (double v : row) acc += std::exp(v - hi);
    result.total += hi + std::log(acc / static_cast<double>(row.size()));
  }
  return result;
}

std::vector<double> predictive_means(const RowViews& predictive_draws) {
  std::vector<double> out;
  out.reserve(predictive_draws.size());
  for (const auto row : predictive_draws) {
    double acc = 0.0;
    for (double v : row) acc += v;
    out.push_back(row.empty() ? std::numeric_limits<double>::quiet_NaN() : acc / static_cast<double>(row.size()));
  }
  return out;
}

PointErrors point_errors(std::span<const double> forecasts, std::span<const double> actuals) {
  if (forecasts.size() != actuals.size()) throw ConfigError("actuals", "row count does not match forecasts");
  if (forecasts.empty()) return {};
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double e = forecasts[i] - actuals[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  const double n = static_cast<double>(forecasts.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

PointErrors point_errors(const RowViews& predictive_draws, std::span<const double> actuals) {
  const std::vector<double> forecasts = predictive_means(predictive_draws);
  return point_errors(forecasts, actuals);
}

LocationFit location_fit(const RowViews& predictive_draws, std::span<const double> actuals) {
  if (predictive_draws.size() != actuals.size()) throw ConfigError("actuals", "row count does not match draws");
  if (actuals.empty()) throw ConfigError("actuals", "location fit needs a nonempty batch");
  LocationFit fit;
  double median_sum = 0.0;
  std::size_t used = 0;
  std::vector<double> scratch;
  for (const auto row : predictive_draws) {
    if (row.empty()) {
      ++fit.excluded_rows;
      continue;
    }
    scratch.assign(row.begin(), row.end());
    const std::size_t mid = scratch.size() / 2;
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(mid), scratch.end());
    double median = scratch[mid];
    if (scratch.size() % 2 == 0) {
      median = 0.5 * (median + *std::max_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    median_sum += median;
    ++used;
  }
  if (fit.excluded_rows) {
    std::cerr << "warning: location fit excluded " << fit.excluded_rows << " rows without predictive draws\n";
  }
  fit.predicted_location = used ? median_sum / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
  double actual_sum = 0.0;
  for (double a : actuals) actual_sum += a;
  fit.actual_mean = actual_sum / static_cast<double>(actuals.size());
  return fit;
}

PrequentialRecord PrequentialTracker::add(PrequentialRecord record) {
  if (!record.in_sample && !seen_out_of_sample_) {
    seen_out_of_sample_ = true;
    rows_ = 0;
    lppd_ = abs_sum_ = sq_sum_ = 0.0;
  }
  if (!record.in_sample || !seen_out_of_sample_) {
    const double n = static_cast<double>(record.rows);
    rows_ += record.rows;
    lppd_ += record.lppd;
    abs_sum_ += record.mae * n;
    sq_sum_ += record.rmse * record.rmse * n;
  }
  record.cum_lppd = lppd_;
  record.cum_mae = rows_ ? abs_sum_ / static_cast<double>(rows_) : 0.0;
  record.cum_rmse = rows_ ? std::sqrt(sq_sum_ / static_cast<double>(rows_)) : 0.0;
  return record;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

MetricsWriter::MetricsWriter(std::ostream& os) : os_(os) { os_ << kMetricsHeader << '\n'; }

void MetricsWriter::write(const PrequentialRecord& r) {
  os_ << r.batch_index << ',' << r.rows << ',' << (r.in_sample ? 1 : 0) << ',' << format_double(r.lppd) << ','
      << format_double(r.mae) << ',' << format_double(r.rmse) << ',' << format_double(r.pred_location) << ','
      << format_double(r.actual_mean) << ',' << r.divergences << ',' << format_double(r.cum_lppd) << ','
      << format_double(r.cum_mae) << ',' << format_double(r.cum_rmse) << '\n';
  os_.flush();
}

std::vector<PrequentialRecord> read_metrics(std::istream& is) {
  std::vector<PrequentialRecord> out;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line)) return out;
  ++line_no;
  if (line != kMetricsHeader) throw StreamError(line_no, "unexpected metrics header");
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 12) throw StreamError(line_no, "expected 12 fields");
    try {
      PrequentialRecord r;
      r.batch_index = std::stoul(fields[0]);
      r.rows = std::stoul(fields[1]);
      r.in_sample = fields[2] == "1";
      r.lppd = std::stod(fields[3]);
      r.mae = std::stod(fields[4]);
      r.rmse = std::stod(fields[5]);
      r.pred_location = std::stod(fields[6]);
      r.actual_mean = std::stod(fields[7]);
      r.divergences = std::stoul(fields[8]);
      r.cum_lppd = std::stod(fields[9]);
      r.cum_mae = std::stod(fields[10]);
      r.cum_rmse = std::stod(fields[11]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw StreamError(line_no, "unparseable metrics field");
    }
  }
  return out;
}

}  // namespace ltvstream
