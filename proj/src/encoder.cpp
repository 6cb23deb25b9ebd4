#include "ltvstream/encoder.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "ltvstream/errors.hpp"

namespace ltvstream {

StreamingOrdinalEncoder::StreamingOrdinalEncoder(std::size_t capacity, bool emit_fresh_code_on_first_sight)
    : capacity_(capacity), emit_fresh_(emit_fresh_code_on_first_sight) {
  if (capacity_ < 1) throw ConfigError("capacity", "must be at least 1");
}

CategoryCode StreamingOrdinalEncoder::encode(std::string_view value) {
  if (value.empty()) return kUnknownCode;
  if (auto it = codes_.find(std::string(value)); it != codes_.end()) return it->second;
  if (values_.size() + 1 >= capacity_) throw CapacityExhausted(std::string(value), capacity_);
  const auto code = static_cast<CategoryCode>(values_.size() + 1);
  values_.emplace_back(value);
  codes_.emplace(values_.back(), code);
  return emit_fresh_ ? code : kUnknownCode;
}

std::vector<CategoryCode> StreamingOrdinalEncoder::encode(const std::vector<std::string>& values) {
  std::vector<CategoryCode> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(encode(v));
  return out;
}

CategoryCode StreamingOrdinalEncoder::code_of(std::string_view value) const {
  if (auto it = codes_.find(std::string(value)); it != codes_.end()) return it->second;
  return kUnknownCode;
}

EncodingTable StreamingOrdinalEncoder::table() const {
  EncodingTable out;
  out.reserve(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) out.emplace_back(values_[i], static_cast<CategoryCode>(i + 1));
  return out;
}

void StreamingOrdinalEncoder::write_table(std::ostream& os) const {
  for (std::size_t i = 0; i < values_.size(); ++i) os << values_[i] << '\t' << (i + 1) << '\n';
}

StreamingOrdinalEncoder StreamingOrdinalEncoder::from_table(const EncodingTable& table, std::size_t capacity,
                                                            bool emit_fresh_code_on_first_sight) {
  StreamingOrdinalEncoder enc(capacity, emit_fresh_code_on_first_sight);
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table[i].second != i + 1) {
      throw ConfigError("encoding_table", "codes must be consecutive from 1 in table order");
    }
    if (table[i].first.empty() || enc.codes_.count(table[i].first)) {
      throw ConfigError("encoding_table", "values must be non-empty and unique");
    }
    if (enc.values_.size() + 1 >= capacity) throw CapacityExhausted(table[i].first, capacity);
    enc.values_.push_back(table[i].first);
    enc.codes_.emplace(table[i].first, table[i].second);
  }
  return enc;
}

std::size_t StreamingOrdinalEncoder::footprint_bytes() const noexcept {
  std::size_t bytes = sizeof(*this);
  for (const auto& v : values_) bytes += 2 * (v.capacity() + sizeof(std::string)) + sizeof(CategoryCode);
  return bytes;
}

OrdinalEncoder::OrdinalEncoder(const EncodingTable& table) {
  for (const auto& [value, code] : table) codes_.emplace(value, code);
}

CategoryCode OrdinalEncoder::encode(std::string_view value) const {
  if (auto it = codes_.find(std::string(value)); it != codes_.end()) return it->second;
  return kUnknownCode;
}

std::vector<CategoryCode> OrdinalEncoder::encode(const std::vector<std::string>& values) const {
  std::vector<CategoryCode> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(encode(v));
  return out;
}

EncodingTable read_encoding_table(std::istream& is) {
  EncodingTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw StreamError(line_no, "expected value<TAB>code");
    try {
      table.emplace_back(line.substr(0, tab), static_cast<CategoryCode>(std::stoul(line.substr(tab + 1))));
    } catch (const std::logic_error&) {
      throw StreamError(line_no, "code is not an integer");
    }
  }
  return table;
}

}  // namespace ltvstream
