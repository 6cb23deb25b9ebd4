#include "ltvstream/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>

#include "ltvstream/errors.hpp"

namespace ltvstream {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError(path + it.key(), "unknown setting");
  }
}

template <class T>
void read_field(const json& j, const char* key, const std::string& path, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + key, "has the wrong type");
  }
}

void read_size(const json& j, const char* key, const std::string& path, std::size_t& out) {
  if (!j.contains(key)) return;
  long long v = 0;
  read_field(j, key, path, v);
  if (v < 0) throw ConfigError(path + key, "must be non-negative");
  out = static_cast<std::size_t>(v);
}

void read_optional(const json& j, const char* key, std::optional<double>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  double v = 0.0;
  read_field(j, key, "", v);
  out = v;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void RunConfig::validate() const {
  sampler.validate();
  stream.validate();
  if (!synth && stream.path.empty()) throw ConfigError("stream.input", "an input file or a synth spec is required");
  if (synth) synth->validate();
  if (category_capacity < 2) throw ConfigError("category_capacity", "must be at least 2");
  model_spec().validate();
}

ModelSpec RunConfig::model_spec() const {
  ModelSpec spec;
  spec.likelihood = model;
  spec.category_capacity = category_capacity;
  spec.tau0 = tau0;
  spec.df_tau0 = df_tau0;
  return spec;
}

nlohmann::json to_json(const RunConfig& c) {
  json j;
  j["model"] = std::string(to_string(c.model));
  j["sampler"] = {{"num_samples", c.sampler.num_samples},
                  {"num_warmup", c.sampler.num_warmup},
                  {"extra_warmup", c.sampler.extra_warmup},
                  {"max_tree_depth", c.sampler.max_tree_depth},
                  {"target_accept", c.sampler.target_accept},
                  {"step_size_init", c.sampler.step_size_init},
                  {"max_energy_error", c.sampler.max_energy_error}};
  j["stream"] = {{"input", c.stream.path},
                 {"batch_size", c.stream.batch_size},
                 {"category_column", c.stream.category_column},
                 {"target_column", c.stream.target_column},
                 {"delimiter", std::string(1, c.stream.delimiter)}};
  j["synth"] = c.synth ? to_json(*c.synth) : json(nullptr);
  j["scaler"] = std::string(to_string(c.scaler));
  j["category_capacity"] = c.category_capacity;
  j["tau0"] = optional_json(c.tau0);
  j["df_tau0"] = optional_json(c.df_tau0);
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c) {
  if (!j.is_object()) throw ConfigError("config", "must be a JSON object");
  reject_unknown(j,
                 {"model", "sampler", "stream", "synth", "scaler", "category_capacity", "tau0", "df_tau0", "seed",
                  "output_dir"},
                 "");
  if (j.contains("model")) {
    std::string name;
    read_field(j, "model", "", name);
    try {
      c.model = parse_likelihood(name);
    } catch (const ConfigError& e) {
      throw ConfigError("model", e.detail());
    }
  }
  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    if (!s.is_object()) throw ConfigError("sampler", "must be an object");
    reject_unknown(s,
                   {"num_samples", "num_warmup", "extra_warmup", "max_tree_depth", "target_accept", "step_size_init",
                    "max_energy_error"},
                   "sampler.");
    read_size(s, "num_samples", "sampler.", c.sampler.num_samples);
    read_size(s, "num_warmup", "sampler.", c.sampler.num_warmup);
    read_size(s, "extra_warmup", "sampler.", c.sampler.extra_warmup);
    read_field(s, "max_tree_depth", "sampler.", c.sampler.max_tree_depth);
    read_field(s, "target_accept", "sampler.", c.sampler.target_accept);
    read_field(s, "step_size_init", "sampler.", c.sampler.step_size_init);
    read_field(s, "max_energy_error", "sampler.", c.sampler.max_energy_error);
  }
  if (j.contains("stream")) {
    const json& s = j.at("stream");
    if (!s.is_object()) throw ConfigError("stream", "must be an object");
    reject_unknown(s, {"input", "batch_size", "category_column", "target_column", "delimiter"}, "stream.");
    read_field(s, "input", "stream.", c.stream.path);
    read_size(s, "batch_size", "stream.", c.stream.batch_size);
    read_field(s, "category_column", "stream.", c.stream.category_column);
    read_field(s, "target_column", "stream.", c.stream.target_column);
    if (s.contains("delimiter")) {
      std::string d;
      read_field(s, "delimiter", "stream.", d);
      if (d.size() != 1) throw ConfigError("stream.delimiter", "must be a single character");
      c.stream.delimiter = d[0];
    }
  }
  if (j.contains("synth")) {
    if (j.at("synth").is_null()) {
      c.synth.reset();
    } else {
      try {
        c.synth = synth_spec_from_json(j.at("synth"));
      } catch (const ConfigError& e) {
        throw ConfigError("synth." + e.field(), e.detail());
      }
    }
  }
  if (j.contains("scaler")) {
    std::string name;
    read_field(j, "scaler", "", name);
    try {
      c.scaler = parse_scaler_kind(name);
    } catch (const ConfigError& e) {
      throw ConfigError("scaler", e.detail());
    }
  }
  read_size(j, "category_capacity", "", c.category_capacity);
  read_optional(j, "tau0", c.tau0);
  read_optional(j, "df_tau0", c.df_tau0);
  read_field(j, "seed", "", c.seed);
  read_field(j, "output_dir", "", c.output_dir);
  return c;
}

RunConfig read_run_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return run_config_from_json(j, std::move(base));
}

void write_diagnostics(std::ostream& os, const std::vector<BatchDiagnostics>& diagnostics) {
  os << "batch_index,warmup_steps,warmup_divergences,sample_divergences,step_size,mean_accept,mean_tree_depth,"
        "max_tree_depth,mean_leapfrog_steps\n";
  for (const auto& d : diagnostics) {
    os << d.batch_index << ',' << d.warmup_steps << ',' << d.warmup_divergences << ',' << d.sample_divergences << ','
       << format_double(d.step_size) << ',' << format_double(d.mean_accept) << ','
       << format_double(d.mean_tree_depth) << ',' << d.max_tree_depth_seen << ','
       << format_double(d.mean_leapfrog_steps) << '\n';
  }
}

namespace {

struct PreparedBatch {
  std::size_t index = 0;
  std::vector<CategoryCode> codes;
  std::vector<double> targets;  // target units
};

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

json p2_json(const P2Quantile& q) {
  const auto& s = q.state();
  return {{"p", s.p}, {"count", s.count}, {"heights", s.heights}, {"positions", s.positions}, {"desired", s.desired}};
}

json scaler_json(const OnlineScaler& scaler) {
  json j{{"kind", std::string(to_string(scaler.kind()))}};
  if (const auto* r = std::get_if<RobustScaler>(&scaler.impl())) {
    j["q1"] = p2_json(r->q1());
    j["median"] = p2_json(r->q2());
    j["q3"] = p2_json(r->q3());
  } else if (const auto* s = std::get_if<StandardScaler>(&scaler.impl())) {
    j["count"] = s->count();
    j["mean"] = s->mean();
    j["stddev"] = s->stddev();
  }
  return j;
}

json state_json(const SamplerState& state, const StreamingOrdinalEncoder& encoder, const OnlineScaler& scaler,
                const ParamLayout& layout) {
  json j;
  j["parameter_names"] = layout.names();
  j["position"] = state.position;
  j["step_size"] = state.step_size;
  j["inverse_mass_diag"] = state.inverse_mass_diag;
  j["adapted_steps"] = state.adaptation.adapted_steps;
  j["divergence_count"] = state.divergence_count;
  j["rng"] = state.rng.serialize();
  json table = json::array();
  for (const auto& [value, code] : encoder.table()) table.push_back({value, code});
  j["encoder"] = {{"capacity", encoder.capacity()}, {"table", table}};
  j["scaler"] = scaler_json(scaler);
  return j;
}

}  // namespace

RunResult run_pipeline(const RunConfig& config, std::ostream* log) {
  config.validate();
  namespace fs = std::filesystem;
  const bool write_files = !config.output_dir.empty();
  const fs::path out_dir(config.output_dir);
  std::ofstream metrics_out;
  std::optional<MetricsWriter> metrics;
  if (write_files) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + config.output_dir + "': " + ec.message());
    auto manifest = open_output(out_dir / kManifestFile);
    manifest << to_json(config).dump(2) << '\n';
    metrics_out = open_output(out_dir / kMetricsFile);
    metrics.emplace(metrics_out);
  }

  const LtvModel model(config.model_spec());
  StreamingOrdinalEncoder encoder(config.category_capacity);
  OnlineScaler scaler(config.scaler);
  const Rng root(config.seed);
  Rng init_rng = root.split(1);
  OnlineSampler sampler(config.sampler, model.initial_position(init_rng), root.split(2).next_u64());

  std::optional<CsvBatchReader> reader;
  std::optional<SynthStream> synth;
  if (config.synth) {
    synth.emplace(*config.synth);
  } else {
    reader.emplace(config.stream);
  }

  RunResult result;
  std::vector<CategoryStats> stats(config.category_capacity);
  for (std::size_t c = 0; c < stats.size(); ++c) {
    stats[c].code = static_cast<CategoryCode>(c);
    stats[c].max_target = -kInf;
    stats[c].max_predictive = -kInf;
  }
  PrequentialTracker tracker;
  AffineMap current_map{};
  std::optional<PrequentialRecord> pending;
  std::optional<SampleChain> final_chain;

  std::function<std::optional<PreparedBatch>()> next = [&]() -> std::optional<PreparedBatch> {
    std::optional<DataBatch> raw = synth ? synth->next_batch(config.stream.batch_size) : reader->next();
    if (!raw) return std::nullopt;
    PreparedBatch batch;
    batch.index = raw->index;
    batch.codes.reserve(raw->rows.size());
    batch.targets.reserve(raw->rows.size());
    for (const RawRow& row : raw->rows) {
      batch.codes.push_back(encoder.encode(row.category));
      batch.targets.push_back(row.target);
    }
    return batch;
  };

  auto scaled_rows = [](const PreparedBatch& batch, const AffineMap& map) {
    std::vector<ObservationRow> rows(batch.codes.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = {batch.codes[i], map.scale(batch.targets[i])};
    return rows;
  };

  OnlineHooks<PreparedBatch> hooks;
  hooks.bind = [&](const PreparedBatch& batch) {
    for (double y : batch.targets) scaler.update(y);
    current_map = scaler.snapshot();
    const auto rows = scaled_rows(batch, current_map);
    return model.build_density(rows);
  };
  hooks.predict = [&](std::size_t index, const PreparedBatch& batch, const SampleChain& chain, bool in_sample) {
    // Before the first fit nothing has been scaled; only batch 1 lands here
    // and it is scored after its own fit, so current_map is always set.
    const auto rows = scaled_rows(batch, current_map);
    Rng rng = root.split(1000 + index);
    const PosteriorBatch post = posterior_predictive(model, chain, rows, current_map, rng);
    result.truncation += post.truncation;
    const RowViews draws = row_views(post.predictive);
    PrequentialRecord record;
    record.batch_index = index;
    record.rows = rows.size();
    record.in_sample = in_sample;
    record.lppd = lppd(row_views(post.log_density)).total;
    const PointErrors errors = point_errors(draws, batch.targets);
    record.mae = errors.mae;
    record.rmse = errors.rmse;
    const LocationFit loc = location_fit(draws, batch.targets);
    record.pred_location = loc.predicted_location;
    record.actual_mean = loc.actual_mean;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CategoryStats& s = stats[batch.codes[i]];
      ++s.rows;
      s.max_target = std::max(s.max_target, batch.targets[i]);
      for (double d : draws[i]) s.max_predictive = std::max(s.max_predictive, d);
    }
    pending = record;
  };
  hooks.fitted = [&](const PreparedBatch& batch, const BatchFit& fit, const SamplerState& state) {
    result.rows += batch.targets.size();
    result.diagnostics.push_back(fit.diagnostics);
    if (pending) {
      pending->divergences = fit.diagnostics.warmup_divergences + fit.diagnostics.sample_divergences;
      const PrequentialRecord record = tracker.add(*pending);
      pending.reset();
      result.records.push_back(record);
      if (metrics) {
        metrics->write(record);
        metrics_out.flush();
      }
      if (log) {
        *log << "batch " << record.batch_index << ": rows=" << record.rows << " lppd=" << format_double(record.lppd)
             << " mae=" << format_double(record.mae) << " divergences=" << record.divergences
             << " step=" << format_double(fit.diagnostics.step_size) << '\n';
      }
    }
    const std::size_t carried = state.footprint_bytes() + fit.chain.footprint_bytes() + encoder.footprint_bytes() +
                                sizeof(OnlineScaler);
    result.peak_state_bytes = std::max(result.peak_state_bytes, carried);
    final_chain = fit.chain;
  };

  result.batches = run_online(next, sampler, hooks);
  if (reader) result.skipped_rows = reader->skipped_missing_target();
  result.encoding = encoder.table();
  for (const auto& s : stats) {
    if (s.rows > 0) result.categories.push_back(s);
  }
  if (model.spec().likelihood == Likelihood::student_t && final_chain) {
    result.fat_tail = fat_tail_report(*final_chain, model, encoder.size() + 1);
  }

  if (write_files) {
    auto diag = open_output(out_dir / kDiagnosticsFile);
    write_diagnostics(diag, result.diagnostics);
    if (!result.fat_tail.empty()) {
      auto ft = open_output(out_dir / kFatTailFile);
      write_fat_tail_report(ft, result.fat_tail, result.encoding);
    }
    auto cats = open_output(out_dir / kCategoriesFile);
    cats << "category,code,rows,max_target,max_predictive\n";
    for (const auto& s : result.categories) {
      std::string name = "<unknown>";
      for (const auto& [value, code] : result.encoding) {
        if (code == s.code) name = value;
      }
      cats << escape_field(name) << ',' << s.code << ',' << s.rows << ',' << format_double(s.max_target) << ','
           << format_double(s.max_predictive) << '\n';
    }
    auto enc = open_output(out_dir / kEncodingFile);
    encoder.write_table(enc);
    auto st = open_output(out_dir / kStateFile);
    st << state_json(sampler.state(), encoder, scaler, model.layout()).dump(2) << '\n';
  }
  return result;
}

}  // namespace ltvstream
