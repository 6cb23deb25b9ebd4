#include <doctest.h>

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ltvstream/encoder.hpp"
#include "ltvstream/errors.hpp"
#include "ltvstream/rng.hpp"

using namespace ltvstream;

using Codes = std::vector<CategoryCode>;
using Values = std::vector<std::string>;

TEST_CASE("first occurrence is emitted as unknown, then registered") {
  StreamingOrdinalEncoder enc;
  CHECK(enc.encode(Values{"a", "b", "a", "c", "b"}) == Codes{0, 0, 1, 0, 2});
  StreamingOrdinalEncoder enc2;
  CHECK(enc2.encode(Values{"a", "a", "a"}) == Codes{0, 1, 1});
  StreamingOrdinalEncoder enc3;
  CHECK(enc3.encode(Values{}).empty());
  CHECK(enc3.size() == 0);
}

TEST_CASE("fresh-code variant") {
  StreamingOrdinalEncoder enc(kDefaultCategoryCapacity, true);
  CHECK(enc.encode(Values{"a", "b", "a", "c", "b"}) == Codes{1, 2, 1, 3, 2});
}

TEST_CASE("empty values map to unknown and are never registered") {
  StreamingOrdinalEncoder enc;
  CHECK(enc.encode("") == kUnknownCode);
  CHECK(enc.encode("") == kUnknownCode);
  CHECK(enc.size() == 0);
}

TEST_CASE("batch table") {
  StreamingOrdinalEncoder enc;
  CHECK(enc.table().empty());
  enc.encode(Values{"a", "b", "a"});
  const EncodingTable expected{{"a", 1}, {"b", 2}};
  CHECK(enc.table() == expected);

  std::ostringstream os;
  enc.write_table(os);
  CHECK(os.str() == "a\t1\nb\t2\n");
  std::istringstream is(os.str());
  CHECK(read_encoding_table(is) == expected);

  const auto restored = StreamingOrdinalEncoder::from_table(expected, 16);
  CHECK(restored.code_of("b") == 2);
  CHECK(restored.size() == 2);
}

TEST_CASE("capacity boundary") {
  StreamingOrdinalEncoder enc(4);
  enc.encode(Values{"a", "b", "c"});
  CHECK(enc.table().size() == 3);  // capacity - 1
  CHECK(enc.encode("b") == 2);
  try {
    enc.encode("d");
    FAIL("expected CapacityExhausted");
  } catch (const CapacityExhausted& e) {
    CHECK(e.value() == "d");
    CHECK(e.capacity() == 4);
  }
  CHECK(enc.size() == 3);
}

TEST_CASE("second pass equals the batch encoder seeded with the table") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto len = 1 + rng.next_u64() % 60;
    const auto alphabet = 1 + rng.next_u64() % 12;
    Values stream;
    for (std::size_t i = 0; i < len; ++i) stream.push_back("v" + std::to_string(rng.next_u64() % alphabet));
    StreamingOrdinalEncoder enc(64);
    const auto first = enc.encode(stream);
    const auto second = enc.encode(stream);
    const OrdinalEncoder batch(enc.table());
    CHECK(second == batch.encode(stream));

    // Code stability and injectivity.
    std::set<CategoryCode> codes;
    for (const auto& [value, code] : enc.table()) {
      CHECK(code != kUnknownCode);
      CHECK(codes.insert(code).second);
      CHECK(enc.code_of(value) == code);
    }
    for (std::size_t i = 0; i < stream.size(); ++i) {
      if (first[i] != kUnknownCode) CHECK(first[i] == second[i]);
    }
  }
}

TEST_CASE("codes are consecutive in first-occurrence order") {
  StreamingOrdinalEncoder enc;
  enc.encode(Values{"z", "y", "z", "x", "w"});
  const auto t = enc.table();
  REQUIRE(t.size() == 4);
  CHECK(t[0].first == "z");
  CHECK(t[3].first == "w");
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i].second == i + 1);
}

TEST_CASE("batch encoder maps unseen values to unknown") {
  const OrdinalEncoder batch(EncodingTable{{"a", 1}});
  CHECK(batch.encode("a") == 1);
  CHECK(batch.encode("zzz") == kUnknownCode);
}
