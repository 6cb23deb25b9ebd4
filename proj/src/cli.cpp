#include "ltvstream/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ltvstream/data_synth.hpp"
#include "ltvstream/errors.hpp"
#include "ltvstream/pipeline.hpp"

namespace ltvstream {

namespace {

std::string winner(double first, double second, bool higher_is_better) {
  if (first == second) return "tie";
  return (first > second) == higher_is_better ? "first" : "second";
}

std::vector<PrequentialRecord> load_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics '" + path + "'");
  return read_metrics(in);
}

}  // namespace

Comparison compare_metrics(const std::vector<PrequentialRecord>& first, const std::vector<PrequentialRecord>& second) {
  if (first.size() != second.size()) {
    throw ConfigError("metrics", "batch counts differ (" + std::to_string(first.size()) + " vs " +
                                     std::to_string(second.size()) + ")");
  }
  Comparison out;
  for (std::size_t i = 0; i < first.size(); ++i) {
    const auto& a = first[i];
    const auto& b = second[i];
    if (a.batch_index != b.batch_index) {
      throw ConfigError("metrics", "batch indices differ at record " + std::to_string(i + 1));
    }
    out.batches.push_back({a.batch_index, a.lppd - b.lppd, a.mae - b.mae, a.rmse - b.rmse, a.cum_lppd - b.cum_lppd,
                           a.cum_mae - b.cum_mae, a.cum_rmse - b.cum_rmse});
  }
  if (first.empty()) {
    out.lppd_winner = out.mae_winner = out.rmse_winner = "tie";
  } else {
    out.lppd_winner = winner(first.back().cum_lppd, second.back().cum_lppd, true);
    out.mae_winner = winner(first.back().cum_mae, second.back().cum_mae, false);
    out.rmse_winner = winner(first.back().cum_rmse, second.back().cum_rmse, false);
  }
  return out;
}

void write_comparison(std::ostream& os, const Comparison& c) {
  os << "batch_index,d_lppd,d_mae,d_rmse,d_cum_lppd,d_cum_mae,d_cum_rmse\n";
  for (const auto& d : c.batches) {
    os << d.batch_index << ',' << format_double(d.lppd) << ',' << format_double(d.mae) << ','
       << format_double(d.rmse) << ',' << format_double(d.cum_lppd) << ',' << format_double(d.cum_mae) << ','
       << format_double(d.cum_rmse) << '\n';
  }
  os << "# winner lppd=" << c.lppd_winner << " mae=" << c.mae_winner << " rmse=" << c.rmse_winner << '\n';
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online Bayesian LTV regression over mini-batch streams", "ltvstream"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic (category, target) stream");
  std::string spec_path, demo_name, synth_out;
  std::optional<std::uint64_t> synth_seed;
  std::optional<long long> synth_rows;
  auto* spec_opt = synth->add_option("--spec", spec_path, "JSON generator spec")->check(CLI::ExistingFile);
  synth->add_option("--demo", demo_name, "Built-in spec: mixed-tails, drift or pareto")
      ->check(CLI::IsMember({"mixed-tails", "drift", "pareto"}))
      ->excludes(spec_opt);
  synth->add_option("--seed", synth_seed, "Override the spec seed");
  synth->add_option("--rows", synth_rows, "Override the row count");
  synth->add_option("-o,--out", synth_out, "Output CSV (stdout when omitted)");

  // run
  auto* run = app.add_subcommand("run", "Fit the stream online with prequential scoring");
  std::string config_path, manifest_path, synth_spec_path;
  std::optional<std::string> input, model, scaler, output_dir, category_column, target_column, delimiter;
  std::optional<std::size_t> samples, warmup, extra_warmup, batch_size, capacity;
  std::optional<int> max_depth;
  std::optional<double> target_accept, tau0, df_tau0;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  auto* cfg_opt = run->add_option("--config", config_path, "JSON run config")->check(CLI::ExistingFile);
  run->add_option("--manifest", manifest_path, "Manifest of an earlier run to replay")
      ->check(CLI::ExistingFile)
      ->excludes(cfg_opt);
  run->add_option("-i,--input", input, "Input CSV");
  run->add_option("--synth-spec", synth_spec_path, "Generate the input from a JSON spec instead")
      ->check(CLI::ExistingFile);
  run->add_option("--model", model, "student_t or gaussian");
  run->add_option("--samples", samples, "Draws per batch");
  run->add_option("--warmup", warmup, "Warmup steps on the first batch");
  run->add_option("--extra-warmup", extra_warmup, "Warmup steps on every later batch");
  run->add_option("--max-tree-depth", max_depth, "NUTS tree depth limit");
  run->add_option("--target-accept", target_accept, "Step-size adaptation target");
  run->add_option("--batch-size", batch_size, "Rows per mini-batch");
  run->add_option("--scaler", scaler, "robust or standard");
  run->add_option("--capacity", capacity, "Category encoder capacity");
  run->add_option("--tau0", tau0, "Global shrinkage scale for location and scale effects");
  run->add_option("--df-tau0", df_tau0, "Global shrinkage scale for degrees-of-freedom effects");
  run->add_option("--category-column", category_column, "Category column name");
  run->add_option("--target-column", target_column, "Target column name");
  run->add_option("--delimiter", delimiter, "Field delimiter");
  run->add_option("--seed", seed, "Run seed");
  run->add_option("-o,--output-dir", output_dir, std::string("Output directory (default $") + kOutputDirEnv + ")");
  run->add_flag("-q,--quiet", quiet, "No per-batch progress");

  // compare
  auto* compare = app.add_subcommand("compare", "Per-batch and cumulative metric deltas of two runs");
  std::string first_path, second_path;
  compare->add_option("first", first_path, "Metrics file")->required();
  compare->add_option("second", second_path, "Metrics file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      SynthSpec spec;
      if (!spec_path.empty()) {
        spec = read_synth_spec(spec_path);
      } else if (demo_name == "drift") {
        spec = drift_demo_spec(36000, 15000);
      } else if (demo_name == "pareto") {
        spec = pareto_demo_spec();
      } else if (demo_name == "mixed-tails") {
        spec = demo_spec();
      } else {
        throw ConfigError("spec", "either --spec or --demo is required");
      }
      if (synth_seed) spec.seed = *synth_seed;
      if (synth_rows) {
        if (*synth_rows < 0) throw ConfigError("rows", "must be non-negative");
        spec.n_rows = static_cast<std::size_t>(*synth_rows);
      }
      spec.validate();
      if (synth_out.empty()) {
        generate(spec, out);
      } else {
        std::ofstream file(synth_out, std::ios::binary | std::ios::trunc);
        if (!file) throw IoError("cannot write '" + synth_out + "'");
        generate(spec, file);
        if (!file) throw IoError("write to '" + synth_out + "' failed");
      }
      return kExitOk;
    }

    if (run->parsed()) {
      RunConfig config;
      if (const char* env = std::getenv(kOutputDirEnv); env && *env) {
        config.output_dir = env;
      } else {
        config.output_dir = kDefaultOutputDir;
      }
      if (!config_path.empty()) config = read_run_config(config_path, config);
      if (!manifest_path.empty()) config = read_run_config(manifest_path, config);
      if (input) {
        config.stream.path = *input;
        config.synth.reset();
      }
      if (!synth_spec_path.empty()) config.synth = read_synth_spec(synth_spec_path);
      if (model) config.model = parse_likelihood(*model);
      if (samples) config.sampler.num_samples = *samples;
      if (warmup) config.sampler.num_warmup = *warmup;
      if (extra_warmup) config.sampler.extra_warmup = *extra_warmup;
      if (max_depth) config.sampler.max_tree_depth = *max_depth;
      if (target_accept) config.sampler.target_accept = *target_accept;
      if (batch_size) config.stream.batch_size = *batch_size;
      if (scaler) config.scaler = parse_scaler_kind(*scaler);
      if (capacity) config.category_capacity = *capacity;
      if (tau0) config.tau0 = *tau0;
      if (df_tau0) config.df_tau0 = *df_tau0;
      if (category_column) config.stream.category_column = *category_column;
      if (target_column) config.stream.target_column = *target_column;
      if (delimiter) {
        if (delimiter->size() != 1) throw ConfigError("delimiter", "must be a single character");
        config.stream.delimiter = (*delimiter)[0];
      }
      if (seed) config.seed = *seed;
      if (output_dir) config.output_dir = *output_dir;

      const RunResult result = run_pipeline(config, quiet ? nullptr : &err);
      out << "batches=" << result.batches << " rows=" << result.rows;
      if (!result.records.empty()) {
        const auto& last = result.records.back();
        out << " cum_lppd=" << format_double(last.cum_lppd) << " cum_mae=" << format_double(last.cum_mae)
            << " cum_rmse=" << format_double(last.cum_rmse);
      }
      out << " output=" << config.output_dir << '\n';
      if (result.skipped_rows > 0) err << "warning: skipped " << result.skipped_rows << " rows without a target\n";
      return kExitOk;
    }

    if (compare->parsed()) {
      write_comparison(out, compare_metrics(load_metrics(first_path), load_metrics(second_path)));
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CapacityExhausted& e) {
    err << "error: " << e.what() << '\n';
    return kExitCapacity;
  } catch (const SamplerError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSampler;
  } catch (const StreamError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace ltvstream
