#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ltvstream {

using CategoryCode = std::uint32_t;

inline constexpr CategoryCode kUnknownCode = 0;
inline constexpr std::size_t kDefaultCategoryCapacity = 1024;

using EncodingTable = std::vector<std::pair<std::string, CategoryCode>>;

// Chronological ordinal encoder. Codes 1, 2, ... are handed out in order of
// first occurrence; code 0 is reserved for unknown and empty values. By
// default the first occurrence of a value is emitted as 0 and the value is
// registered for subsequent rows.
class StreamingOrdinalEncoder {
 public:
  explicit StreamingOrdinalEncoder(std::size_t capacity = kDefaultCategoryCapacity,
                                   bool emit_fresh_code_on_first_sight = false);

  // Throws CapacityExhausted when an unseen value would need code
  // `capacity`; the state is left unchanged in that case.
  CategoryCode encode(std::string_view value);
  std::vector<CategoryCode> encode(const std::vector<std::string>& values);

  // Lookup without registration; unknown for unseen values.
  CategoryCode code_of(std::string_view value) const;

  std::size_t size() const noexcept { return values_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool emits_fresh_code_on_first_sight() const noexcept { return emit_fresh_; }

  // Mapping in code order.
  EncodingTable table() const;
  void write_table(std::ostream& os) const;
  static StreamingOrdinalEncoder from_table(const EncodingTable& table, std::size_t capacity,
                                            bool emit_fresh_code_on_first_sight = false);

  std::size_t footprint_bytes() const noexcept;

 private:
  std::size_t capacity_;
  bool emit_fresh_;
  std::unordered_map<std::string, CategoryCode> codes_;
  std::vector<std::string> values_;  // values_[c - 1] has code c
};

// Classic batch ordinal encoder over a fixed mapping: known values map to
// their code, everything else to code 0.
class OrdinalEncoder {
 public:
  explicit OrdinalEncoder(const EncodingTable& table);

  CategoryCode encode(std::string_view value) const;
  std::vector<CategoryCode> encode(const std::vector<std::string>& values) const;

 private:
  std::unordered_map<std::string, CategoryCode> codes_;
};

// Tab-separated "value<TAB>code" lines in code order.
EncodingTable read_encoding_table(std::istream& is);

}  // namespace ltvstream
