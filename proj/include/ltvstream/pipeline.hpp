#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltvstream/data_io.hpp"
#include "ltvstream/data_synth.hpp"
#include "ltvstream/encoder.hpp"
#include "ltvstream/evaluation.hpp"
#include "ltvstream/ltv_model.hpp"
#include "ltvstream/nuts.hpp"
#include "ltvstream/scaler.hpp"

namespace ltvstream {

// Fully resolved settings of one online run. Defaults: batches of 3000 rows,
// 1500 warmup steps, 500 draws, 500 extra warmup steps per later batch,
// robust target scaling, Student-t likelihood.
struct RunConfig {
  Likelihood model = Likelihood::student_t;
  SamplerConfig sampler;
  StreamConfig stream;
  // Alternative to stream.path: rows generated on the fly.
  std::optional<SynthSpec> synth;
  ScalerKind scaler = ScalerKind::robust;
  std::size_t category_capacity = kDefaultCategoryCapacity;
  std::optional<double> tau0;
  std::optional<double> df_tau0;
  std::uint64_t seed = 0;
  std::string output_dir;

  void validate() const;
  ModelSpec model_spec() const;
};

nlohmann::json to_json(const RunConfig& config);
// Rejects unknown keys; errors name the offending field.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig read_run_config(const std::string& path, RunConfig base = {});

struct CategoryStats {
  CategoryCode code = 0;
  std::size_t rows = 0;
  double max_target = 0.0;
  double max_predictive = 0.0;  // over every predictive draw scored for the code
};

struct RunResult {
  std::size_t batches = 0;
  std::size_t rows = 0;
  std::size_t skipped_rows = 0;
  std::vector<PrequentialRecord> records;
  std::vector<BatchDiagnostics> diagnostics;
  std::vector<DfSummary> fat_tail;  // empty for the Gaussian model
  std::vector<CategoryStats> categories;
  EncodingTable encoding;
  // Largest carried state (sampler state, last chain, encoder, scaler) seen
  // between batches. Excludes the batch in flight.
  std::size_t peak_state_bytes = 0;
  TruncationStats truncation;
};

// Output files written into RunConfig::output_dir (when non-empty).
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kDiagnosticsFile = "diagnostics.csv";
inline constexpr const char* kFatTailFile = "fat_tail.csv";
inline constexpr const char* kCategoriesFile = "categories.csv";
inline constexpr const char* kEncodingFile = "encoding.tsv";
inline constexpr const char* kStateFile = "state.json";

// Streams the input through encoder, scaler and the online sampler. Batch j
// is scored by the posterior fit on batch j-1 (batch 1 by its own fit) before
// the sampler sees it. `log` receives one progress line per batch.
RunResult run_pipeline(const RunConfig& config, std::ostream* log = nullptr);

void write_diagnostics(std::ostream& os, const std::vector<BatchDiagnostics>& diagnostics);

}  // namespace ltvstream
