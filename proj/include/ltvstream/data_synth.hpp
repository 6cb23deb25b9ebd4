#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ltvstream/data_io.hpp"
#include "ltvstream/rng.hpp"

namespace ltvstream {

enum class TailKind { gaussian, student_t, cauchy };

TailKind parse_tail_kind(std::string_view name);
std::string_view to_string(TailKind kind);

struct SynthCategory {
  std::string name;
  double weight = 0.0;
  TailKind tail = TailKind::gaussian;
  double df = 0.0;  // student_t only
  double location = 1.0;
  double scale = 1.0;
};

// From row_index on (0-based), every location is multiplied by `multiplier`.
// Events compound.
struct DriftEvent {
  std::size_t row_index = 0;
  double multiplier = 1.0;
};

struct SynthSpec {
  std::vector<SynthCategory> categories;
  std::vector<DriftEvent> drift_events;
  std::size_t n_rows = 0;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& spec);
SynthSpec read_synth_spec(const std::string& path);

// Five categories with similar centres near 1500 and tails ranging from
// Cauchy to Gaussian; 18000 rows.
SynthSpec demo_spec(std::uint64_t seed = 1);

// Single category with a x20 location shift at `drift_row`.
SynthSpec drift_demo_spec(std::size_t n_rows, std::size_t drift_row, std::uint64_t seed = 1);

// Two categories where a fifth of the users carry roughly four fifths of the
// total value.
SynthSpec pareto_demo_spec(std::uint64_t seed = 1);

// Pull-based generator: one row at a time, constant memory.
class SynthStream {
 public:
  explicit SynthStream(SynthSpec spec);

  std::optional<RawRow> next();
  std::optional<DataBatch> next_batch(std::size_t batch_size);
  std::size_t rows_emitted() const noexcept { return row_; }

 private:
  SynthSpec spec_;
  Rng rng_;
  std::vector<double> cumulative_;
  std::size_t next_event_ = 0;
  std::size_t row_ = 0;
  std::size_t batch_index_ = 0;
  double multiplier_ = 1.0;
};

// Streams rows to `visit` in order without materializing them.
void for_each_row(const SynthSpec& spec, const std::function<void(const RawRow&)>& visit);

// Rows drawn in order; deterministic for a given spec.
std::vector<RawRow> generate_rows(const SynthSpec& spec);

// Writes a `category,target` table. Byte-identical for identical specs.
void generate(const SynthSpec& spec, std::ostream& os);

}  // namespace ltvstream
