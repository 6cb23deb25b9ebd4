#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ltvstream/nuts.hpp"

namespace ltvstream {

struct StreamConfig {
  std::string path;
  std::size_t batch_size = kDefaultBatchSize;
  std::string category_column = "category";
  std::string target_column = "target";
  char delimiter = ',';

  void validate() const;
};

struct RawRow {
  std::string category;
  double target = 0.0;
};

struct DataBatch {
  std::size_t index = 0;  // 1-based
  std::size_t first_line = 0;
  std::vector<RawRow> rows;
};

// Splits one delimited line; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_delimited(std::string_view line, char delimiter);

// Quotes a field when it contains the delimiter, a quote or a newline.
std::string escape_field(std::string_view field, char delimiter = ',');

// Pulls fixed-size batches from a header-bearing delimited stream in file
// order. Rows with an empty / NA target are skipped and counted; anything
// else that fails to parse raises StreamError with the line number.
class CsvBatchReader {
 public:
  CsvBatchReader(std::istream& is, const StreamConfig& config);
  // Opens config.path; throws IoError if it cannot be read.
  explicit CsvBatchReader(const StreamConfig& config);

  std::optional<DataBatch> next();

  std::size_t skipped_missing_target() const noexcept { return skipped_missing_; }
  std::size_t negative_targets() const noexcept { return negative_; }
  std::size_t rows_read() const noexcept { return rows_read_; }

 private:
  void read_header();

  std::unique_ptr<std::ifstream> owned_;
  std::istream* is_;
  StreamConfig config_;
  bool header_read_ = false;
  std::size_t category_index_ = 0;
  std::size_t target_index_ = 0;
  std::size_t field_count_ = 0;
  std::size_t line_no_ = 0;
  std::size_t batch_index_ = 0;
  std::size_t skipped_missing_ = 0;
  std::size_t negative_ = 0;
  std::size_t rows_read_ = 0;
};

// Whole-stream convenience for tests and small inputs.
std::vector<DataBatch> read_stream(const StreamConfig& config);

}  // namespace ltvstream
