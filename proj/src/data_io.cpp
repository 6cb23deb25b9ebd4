#include "ltvstream/data_io.hpp"

#include <charconv>
#include <cmath>
#include <iostream>

#include "ltvstream/errors.hpp"

namespace ltvstream {

namespace {

bool is_missing(std::string_view s) { return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan"; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void StreamConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
  if (category_column.empty()) throw ConfigError("category_column", "must be non-empty");
  if (target_column.empty()) throw ConfigError("target_column", "must be non-empty");
  if (category_column == target_column) throw ConfigError("target_column", "must differ from category_column");
}

std::vector<std::string> split_delimited(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delimiter) {
      fields.push_back(std::move(current));
      current.clear();
    } else if (ch != '\r') {
      current.push_back(ch);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string escape_field(std::string_view field, char delimiter) {
  if (field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

CsvBatchReader::CsvBatchReader(std::istream& is, const StreamConfig& config) : is_(&is), config_(config) {
  config_.validate();
}

CsvBatchReader::CsvBatchReader(const StreamConfig& config) : config_(config) {
  config_.validate();
  owned_ = std::make_unique<std::ifstream>(config_.path);
  if (!*owned_) throw IoError("cannot open input '" + config_.path + "'");
  is_ = owned_.get();
}

void CsvBatchReader::read_header() {
  header_read_ = true;
  std::string line;
  if (!std::getline(*is_, line)) {
    field_count_ = 0;
    return;
  }
  ++line_no_;
  const auto header = split_delimited(line, config_.delimiter);
  field_count_ = header.size();
  bool has_category = false, has_target = false;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string_view name = trim(header[i]);
    if (name == config_.category_column) {
      category_index_ = i;
      has_category = true;
    } else if (name == config_.target_column) {
      target_index_ = i;
      has_target = true;
    }
  }
  if (!has_category) throw StreamError(line_no_, "header lacks category column '" + config_.category_column + "'");
  if (!has_target) throw StreamError(line_no_, "header lacks target column '" + config_.target_column + "'");
}

std::optional<DataBatch> CsvBatchReader::next() {
  if (!header_read_) read_header();
  if (field_count_ == 0) return std::nullopt;
  DataBatch batch;
  batch.rows.reserve(config_.batch_size);
  std::string line;
  while (batch.rows.size() < config_.batch_size && std::getline(*is_, line)) {
    ++line_no_;
    if (trim(line).empty()) continue;
    const auto fields = split_delimited(line, config_.delimiter);
    if (fields.size() != field_count_) {
      throw StreamError(line_no_, "expected " + std::to_string(field_count_) + " fields, found " +
                                      std::to_string(fields.size()));
    }
    const std::string_view target_text = trim(fields[target_index_]);
    if (is_missing(target_text)) {
      ++skipped_missing_;
      continue;
    }
    double target = 0.0;
    const auto [ptr, ec] = std::from_chars(target_text.data(), target_text.data() + target_text.size(), target);
    if (ec != std::errc() || ptr != target_text.data() + target_text.size() || !std::isfinite(target)) {
      throw StreamError(line_no_, "target '" + std::string(target_text) + "' is not a finite decimal number");
    }
    if (target < 0.0) {
      if (negative_ == 0) std::cerr << "warning: line " << line_no_ << ": negative target " << target << '\n';
      ++negative_;
    }
    if (batch.rows.empty()) batch.first_line = line_no_;
    batch.rows.push_back(RawRow{std::string(trim(fields[category_index_])), target});
    ++rows_read_;
  }
  if (batch.rows.empty()) return std::nullopt;
  batch.index = ++batch_index_;
  return batch;
}

std::vector<DataBatch> read_stream(const StreamConfig& config) {
  CsvBatchReader reader(config);
  std::vector<DataBatch> out;
  while (auto batch = reader.next()) out.push_back(std::move(*batch));
  return out;
}

}  // namespace ltvstream
