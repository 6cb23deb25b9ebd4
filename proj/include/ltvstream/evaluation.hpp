#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ltvstream/ltv_model.hpp"

namespace ltvstream {

// Row views over per-row draws. Rows may be ragged.
using RowViews = std::vector<std::span<const double>>;

RowViews row_views(const DrawMatrix& m);

struct LppdResult {
  double total = 0.0;
  // Rows whose predictive density underflowed to zero.
  std::vector<std::size_t> neg_inf_rows;
};

// sum_i log(mean_s exp(logp[i][s])), computed with log-sum-exp.
LppdResult lppd(const RowViews& predictive_log_densities);

struct PointErrors {
  double mae = 0.0;
  double rmse = 0.0;
};

// Per-row mean of the draws (the point forecast).
std::vector<double> predictive_means(const RowViews& predictive_draws);
PointErrors point_errors(std::span<const double> forecasts, std::span<const double> actuals);
PointErrors point_errors(const RowViews& predictive_draws, std::span<const double> actuals);

struct LocationFit {
  double predicted_location = 0.0;  // mean over rows of per-row predictive medians
  double actual_mean = 0.0;
  std::size_t excluded_rows = 0;    // rows without draws
};

LocationFit location_fit(const RowViews& predictive_draws, std::span<const double> actuals);

// Metrics for one batch, scored before the batch was used for fitting
// (except batch 1, which has no earlier fit and is flagged in_sample).
struct PrequentialRecord {
  std::size_t batch_index = 0;
  std::size_t rows = 0;
  bool in_sample = false;
  double lppd = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  double pred_location = 0.0;
  double actual_mean = 0.0;
  std::size_t divergences = 0;
  // Running aggregates over out-of-sample batches (over the in-sample batch
  // while no out-of-sample batch exists): summed LPPD, row-weighted MAE and
  // RMSE.
  double cum_lppd = 0.0;
  double cum_mae = 0.0;
  double cum_rmse = 0.0;
  std::chrono::system_clock::time_point timestamp{};
};

class PrequentialTracker {
 public:
  // Fills the cumulative fields of `record` and returns it.
  PrequentialRecord add(PrequentialRecord record);

 private:
  bool seen_out_of_sample_ = false;
  std::size_t rows_ = 0;
  double lppd_ = 0.0;
  double abs_sum_ = 0.0;
  double sq_sum_ = 0.0;
};

// Append-only metrics table. Columns:
// batch_index,rows,in_sample,lppd,mae,rmse,pred_location,actual_mean,divergences,cum_lppd,cum_mae,cum_rmse
class MetricsWriter {
 public:
  explicit MetricsWriter(std::ostream& os);
  void write(const PrequentialRecord& record);

 private:
  std::ostream& os_;
};

inline constexpr const char* kMetricsHeader =
    "batch_index,rows,in_sample,lppd,mae,rmse,pred_location,actual_mean,divergences,cum_lppd,cum_mae,cum_rmse";

std::vector<PrequentialRecord> read_metrics(std::istream& is);

// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace ltvstream
