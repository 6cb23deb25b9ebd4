#include "ltvstream/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>

#include "ltvstream/distributions.hpp"
#include "ltvstream/errors.hpp"
#include "ltvstream/evaluation.hpp"
#include "ltvstream/rng.hpp"

namespace ltvstream {

TailKind parse_tail_kind(std::string_view name) {
  if (name == "gaussian") return TailKind::gaussian;
  if (name == "student_t") return TailKind::student_t;
  if (name == "cauchy") return TailKind::cauchy;
  throw ConfigError("tail", "unknown tail '" + std::string(name) + "' (expected gaussian, student_t or cauchy)");
}

std::string_view to_string(TailKind kind) {
  switch (kind) {
    case TailKind::gaussian: return "gaussian";
    case TailKind::student_t: return "student_t";
    case TailKind::cauchy: return "cauchy";
  }
  return "gaussian";
}

void SynthSpec::validate() const {
  if (n_rows > 0 && categories.empty()) throw ConfigError("categories", "at least one category is required");
  double total = 0.0;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const auto& c = categories[i];
    const std::string at = "categories[" + std::to_string(i) + "].";
    if (c.name.empty()) throw ConfigError(at + "name", "must be non-empty");
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) throw ConfigError(at + "weight", "must be a probability");
    if (!(c.location > 0.0) || !std::isfinite(c.location)) throw ConfigError(at + "location", "must be positive");
    if (!(c.scale > 0.0) || !std::isfinite(c.scale)) throw ConfigError(at + "scale", "must be positive");
    if (c.tail == TailKind::student_t && !(c.df > 0.0)) throw ConfigError(at + "df", "must be positive");
    for (std::size_t k = 0; k < i; ++k) {
      if (categories[k].name == c.name) throw ConfigError(at + "name", "duplicate name '" + c.name + "'");
    }
    total += c.weight;
  }
  if (!categories.empty() && std::abs(total - 1.0) > 1e-6) {
    throw ConfigError("categories", "weights sum to " + format_double(total) + ", expected 1");
  }
  for (std::size_t i = 0; i < drift_events.size(); ++i) {
    const double m = drift_events[i].multiplier;
    if (!(m > 0.0) || !std::isfinite(m)) {
      throw ConfigError("drift_events[" + std::to_string(i) + "].multiplier", "must be positive");
    }
  }
}

namespace {

template <class T>
T field(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + key, "has the wrong type");
  }
}

template <class T>
T field_or(const nlohmann::json& j, const char* key, const std::string& path, T fallback) {
  return j.contains(key) ? field<T>(j, key, path) : fallback;
}

}  // namespace

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("spec", "must be a JSON object");
  SynthSpec spec;
  const auto n_rows = field<long long>(j, "n_rows", "");
  if (n_rows < 0) throw ConfigError("n_rows", "must be non-negative");
  spec.n_rows = static_cast<std::size_t>(n_rows);
  spec.seed = field_or<std::uint64_t>(j, "seed", "", 0);
  const auto& cats = j.contains("categories") ? j.at("categories") : nlohmann::json::array();
  if (!cats.is_array()) throw ConfigError("categories", "must be an array");
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const auto& c = cats[i];
    const std::string at = "categories[" + std::to_string(i) + "].";
    if (!c.is_object()) throw ConfigError("categories[" + std::to_string(i) + "]", "must be an object");
    SynthCategory cat;
    cat.name = field<std::string>(c, "name", at);
    cat.weight = field<double>(c, "weight", at);
    try {
      cat.tail = parse_tail_kind(field<std::string>(c, "tail", at));
    } catch (const ConfigError& e) {
      throw ConfigError(at + "tail", e.detail());
    }
    if (cat.tail == TailKind::student_t) cat.df = field<double>(c, "df", at);
    cat.location = field<double>(c, "location", at);
    cat.scale = field<double>(c, "scale", at);
    spec.categories.push_back(std::move(cat));
  }
  if (j.contains("drift_events")) {
    const auto& events = j.at("drift_events");
    if (!events.is_array()) throw ConfigError("drift_events", "must be an array");
    for (std::size_t i = 0; i < events.size(); ++i) {
      const std::string at = "drift_events[" + std::to_string(i) + "].";
      const auto row = field<long long>(events[i], "row_index", at);
      if (row < 0) throw ConfigError(at + "row_index", "must be non-negative");
      spec.drift_events.push_back({static_cast<std::size_t>(row), field<double>(events[i], "multiplier", at)});
    }
  }
  spec.validate();
  return spec;
}

nlohmann::json to_json(const SynthSpec& spec) {
  nlohmann::json j;
  j["n_rows"] = spec.n_rows;
  j["seed"] = spec.seed;
  j["categories"] = nlohmann::json::array();
  for (const auto& c : spec.categories) {
    nlohmann::json cj{{"name", c.name},
                      {"weight", c.weight},
                      {"tail", std::string(to_string(c.tail))},
                      {"location", c.location},
                      {"scale", c.scale}};
    if (c.tail == TailKind::student_t) cj["df"] = c.df;
    j["categories"].push_back(std::move(cj));
  }
  j["drift_events"] = nlohmann::json::array();
  for (const auto& e : spec.drift_events) {
    j["drift_events"].push_back({{"row_index", e.row_index}, {"multiplier", e.multiplier}});
  }
  return j;
}

SynthSpec read_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("spec", std::string("invalid JSON: ") + e.what());
  }
  return synth_spec_from_json(j);
}

SynthSpec demo_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.n_rows = 18000;
  spec.seed = seed;
  spec.categories = {
      {"organic", 0.30, TailKind::gaussian, 0.0, 1500.0, 300.0},
      {"affiliate", 0.20, TailKind::cauchy, 0.0, 1500.0, 300.0},
      {"social", 0.15, TailKind::student_t, 2.0, 1500.0, 300.0},
      {"search", 0.15, TailKind::student_t, 5.0, 1500.0, 300.0},
      {"display", 0.20, TailKind::student_t, 30.0, 1500.0, 300.0},
  };
  return spec;
}

SynthSpec drift_demo_spec(std::size_t n_rows, std::size_t drift_row, std::uint64_t seed) {
  SynthSpec spec;
  spec.n_rows = n_rows;
  spec.seed = seed;
  spec.categories = {{"all", 1.0, TailKind::gaussian, 0.0, 1000.0, 200.0}};
  spec.drift_events = {{drift_row, 20.0}};
  return spec;
}

SynthSpec pareto_demo_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.n_rows = 100000;
  spec.seed = seed;
  spec.categories = {
      {"casual", 0.8, TailKind::gaussian, 0.0, 50.0, 15.0},
      {"whale", 0.2, TailKind::student_t, 3.0, 800.0, 200.0},
  };
  return spec;
}

SynthStream::SynthStream(SynthSpec spec) : spec_(std::move(spec)), rng_(spec_.seed) {
  spec_.validate();
  double acc = 0.0;
  for (const auto& c : spec_.categories) cumulative_.push_back(acc += c.weight);
  if (!cumulative_.empty()) cumulative_.back() = std::numeric_limits<double>::infinity();
  std::stable_sort(spec_.drift_events.begin(), spec_.drift_events.end(),
                   [](const DriftEvent& a, const DriftEvent& b) { return a.row_index < b.row_index; });
}

std::optional<RawRow> SynthStream::next() {
  if (row_ >= spec_.n_rows) return std::nullopt;
  const auto& events = spec_.drift_events;
  while (next_event_ < events.size() && events[next_event_].row_index <= row_) {
    multiplier_ *= events[next_event_++].multiplier;
  }
  ++row_;
  const double u = rng_.uniform();
  const auto k =
      static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
  const auto& c = spec_.categories[std::min(k, spec_.categories.size() - 1)];
  StudentTParams p{c.location * multiplier_, c.scale, kInf};
  if (c.tail == TailKind::student_t) p.nu = c.df;
  if (c.tail == TailKind::cauchy) p.nu = 1.0;
  return RawRow{c.name, std::max(0.0, sample_student_t(p, rng_))};
}

std::optional<DataBatch> SynthStream::next_batch(std::size_t batch_size) {
  DataBatch batch;
  batch.first_line = row_ + 2;  // as if read from a file with a header
  while (batch.rows.size() < batch_size) {
    auto row = next();
    if (!row) break;
    batch.rows.push_back(std::move(*row));
  }
  if (batch.rows.empty()) return std::nullopt;
  batch.index = ++batch_index_;
  return batch;
}

void for_each_row(const SynthSpec& spec, const std::function<void(const RawRow&)>& visit) {
  SynthStream stream(spec);
  while (auto row = stream.next()) visit(*row);
}

std::vector<RawRow> generate_rows(const SynthSpec& spec) {
  std::vector<RawRow> rows;
  rows.reserve(spec.n_rows);
  for_each_row(spec, [&](const RawRow& r) { rows.push_back(r); });
  return rows;
}

void generate(const SynthSpec& spec, std::ostream& os) {
  os << "category,target\n";
  for_each_row(spec, [&](const RawRow& r) {
    os << escape_field(r.category) << ',' << format_double(r.target) << '\n';
  });
}

}  // namespace ltvstream
