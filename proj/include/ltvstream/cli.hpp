#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ltvstream/evaluation.hpp"

namespace ltvstream {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitIo = 2,
  kExitCapacity = 3,
  kExitSampler = 4,
};

// Environment variable naming the default output directory of `run`.
inline constexpr const char* kOutputDirEnv = "LTVSTREAM_OUTPUT_DIR";
inline constexpr const char* kDefaultOutputDir = "ltvstream-out";

struct MetricDeltas {
  std::size_t batch_index = 0;
  double lppd = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  double cum_lppd = 0.0;
  double cum_mae = 0.0;
  double cum_rmse = 0.0;
};

struct Comparison {
  std::vector<MetricDeltas> batches;  // first minus second
  // "first", "second" or "tie", judged on the final cumulative values
  // (higher LPPD, lower MAE / RMSE wins).
  std::string lppd_winner;
  std::string mae_winner;
  std::string rmse_winner;
};

// Throws ConfigError when the batch counts or indices differ.
Comparison compare_metrics(const std::vector<PrequentialRecord>& first, const std::vector<PrequentialRecord>& second);
void write_comparison(std::ostream& os, const Comparison& comparison);

// Entry point of the `ltvstream` executable. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ltvstream
