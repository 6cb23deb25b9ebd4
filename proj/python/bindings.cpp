#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "ltvstream/data_synth.hpp"
#include "ltvstream/diff_core.hpp"
#include "ltvstream/distributions.hpp"
#include "ltvstream/encoder.hpp"
#include "ltvstream/errors.hpp"
#include "ltvstream/evaluation.hpp"
#include "ltvstream/ltv_model.hpp"
#include "ltvstream/pipeline.hpp"
#include "ltvstream/scaler.hpp"

namespace py = pybind11;
using namespace ltvstream;

namespace {

// JSON crosses the boundary as text; the Python side wraps it with json.
nlohmann::json parse_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("json", e.what());
  }
}

py::dict record_to_dict(const PrequentialRecord& r) {
  py::dict d;
  d["batch_index"] = r.batch_index;
  d["rows"] = r.rows;
  d["in_sample"] = r.in_sample;
  d["lppd"] = r.lppd;
  d["mae"] = r.mae;
  d["rmse"] = r.rmse;
  d["pred_location"] = r.pred_location;
  d["actual_mean"] = r.actual_mean;
  d["divergences"] = r.divergences;
  d["cum_lppd"] = r.cum_lppd;
  d["cum_mae"] = r.cum_mae;
  d["cum_rmse"] = r.cum_rmse;
  return d;
}

py::dict run_result_to_dict(const RunResult& r) {
  py::dict out;
  out["batches"] = r.batches;
  out["rows"] = r.rows;
  out["skipped_rows"] = r.skipped_rows;
  out["peak_state_bytes"] = r.peak_state_bytes;
  py::list records;
  for (const auto& rec : r.records) records.append(record_to_dict(rec));
  out["records"] = records;
  py::list diagnostics;
  for (const auto& d : r.diagnostics) {
    py::dict row;
    row["batch_index"] = d.batch_index;
    row["warmup_steps"] = d.warmup_steps;
    row["warmup_divergences"] = d.warmup_divergences;
    row["sample_divergences"] = d.sample_divergences;
    row["step_size"] = d.step_size;
    row["mean_accept"] = d.mean_accept;
    row["max_tree_depth"] = d.max_tree_depth_seen;
    diagnostics.append(row);
  }
  out["diagnostics"] = diagnostics;
  py::dict names;
  for (const auto& [value, code] : r.encoding) names[py::int_(code)] = value;
  py::list fat_tail;
  for (const auto& s : r.fat_tail) {
    py::dict row;
    row["code"] = s.code;
    row["category"] = names.contains(py::int_(s.code)) ? names[py::int_(s.code)] : py::str("<unknown>");
    row["mean"] = s.mean;
    row["sd"] = s.sd;
    row["median"] = s.median;
    row["q5"] = s.q05;
    row["q95"] = s.q95;
    fat_tail.append(row);
  }
  out["fat_tail"] = fat_tail;
  py::list categories;
  for (const auto& c : r.categories) {
    py::dict row;
    row["code"] = c.code;
    row["rows"] = c.rows;
    row["max_target"] = c.max_target;
    row["max_predictive"] = c.max_predictive;
    categories.append(row);
  }
  out["categories"] = categories;
  out["encoding"] = r.encoding;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Online Bayesian LTV regression with carried NUTS state";

  static py::exception<Error> base_error(m, "LtvError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", base_error.ptr());
  static py::exception<IoError> io_error(m, "IoError", base_error.ptr());
  static py::exception<StreamError> stream_error(m, "StreamError", base_error.ptr());
  static py::exception<CapacityExhausted> capacity_error(m, "CapacityExhausted", base_error.ptr());
  static py::exception<SamplerError> sampler_error(m, "SamplerError", base_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const IoError& e) {
      py::set_error(io_error, e.what());
    } catch (const StreamError& e) {
      py::set_error(stream_error, e.what());
    } catch (const CapacityExhausted& e) {
      py::set_error(capacity_error, e.what());
    } catch (const SamplerError& e) {
      py::set_error(sampler_error, e.what());
    } catch (const Error& e) {
      py::set_error(base_error, e.what());
    }
  });

  m.def("logpdf_normal", py::vectorize(&logpdf_normal), py::arg("x"), py::arg("mu"), py::arg("sigma"));
  m.def(
      "logpdf_student_t",
      py::vectorize([](double x, double mu, double sigma, double nu) { return logpdf_student_t(x, {mu, sigma, nu}); }),
      py::arg("x"), py::arg("mu"), py::arg("sigma"), py::arg("nu"),
      "Location-scale Student-t log density; nu=inf gives the Gaussian.");

  py::class_<StreamingOrdinalEncoder>(m, "StreamingOrdinalEncoder")
      .def(py::init<std::size_t, bool>(), py::arg("capacity") = kDefaultCategoryCapacity,
           py::arg("emit_fresh_code_on_first_sight") = false)
      .def("encode", py::overload_cast<std::string_view>(&StreamingOrdinalEncoder::encode), py::arg("value"))
      .def("encode_many", py::overload_cast<const std::vector<std::string>&>(&StreamingOrdinalEncoder::encode),
           py::arg("values"))
      .def("code_of", &StreamingOrdinalEncoder::code_of, py::arg("value"))
      .def("table", &StreamingOrdinalEncoder::table)
      .def_property_readonly("capacity", &StreamingOrdinalEncoder::capacity)
      .def("__len__", &StreamingOrdinalEncoder::size);

  py::class_<OrdinalEncoder>(m, "OrdinalEncoder")
      .def(py::init<const EncodingTable&>(), py::arg("table"))
      .def("encode", py::overload_cast<std::string_view>(&OrdinalEncoder::encode, py::const_), py::arg("value"))
      .def("encode_many", py::overload_cast<const std::vector<std::string>&>(&OrdinalEncoder::encode, py::const_),
           py::arg("values"));

  py::class_<OnlineScaler>(m, "OnlineScaler")
      .def(py::init([](const std::string& kind) { return OnlineScaler(parse_scaler_kind(kind)); }),
           py::arg("kind") = "robust")
      .def("update", &OnlineScaler::update, py::arg("x"))
      .def("scale_update", &OnlineScaler::scale_update, py::arg("x"))
      .def("scale", &OnlineScaler::scale, py::arg("x"))
      .def("unscale", &OnlineScaler::unscale, py::arg("z"))
      .def_property_readonly("center", [](const OnlineScaler& s) { return s.snapshot().center; })
      .def_property_readonly("spread", [](const OnlineScaler& s) { return s.snapshot().spread; })
      .def_property_readonly("count", &OnlineScaler::count);

  m.def(
      "lppd",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> log_densities) {
        if (log_densities.ndim() != 2) throw ConfigError("log_densities", "expected a rows x draws array");
        const auto rows = static_cast<std::size_t>(log_densities.shape(0));
        const auto cols = static_cast<std::size_t>(log_densities.shape(1));
        RowViews views;
        for (std::size_t i = 0; i < rows; ++i) views.emplace_back(log_densities.data() + i * cols, cols);
        return lppd(views).total;
      },
      py::arg("log_densities"), "Sum over rows of log mean_s exp(log_densities[row, s]).");

  m.def(
      "model_log_density",
      [](const std::string& likelihood, std::size_t capacity, const std::vector<CategoryCode>& codes,
         const std::vector<double>& targets, const std::vector<double>& theta) {
        if (codes.size() != targets.size()) throw ConfigError("targets", "length differs from codes");
        ModelSpec spec;
        spec.likelihood = parse_likelihood(likelihood);
        spec.category_capacity = capacity;
        const LtvModel model(spec);
        std::vector<ObservationRow> rows;
        for (std::size_t i = 0; i < codes.size(); ++i) rows.push_back({codes[i], targets[i]});
        const auto e = model.build_density(rows).evaluate(theta);
        return py::make_tuple(e.log_density, py::array_t<double>(e.gradient.size(), e.gradient.data()));
      },
      py::arg("likelihood"), py::arg("capacity"), py::arg("codes"), py::arg("targets"), py::arg("theta"),
      "Log posterior and gradient of the LTV model for one batch of scaled targets.");

  m.def(
      "model_dimension",
      [](const std::string& likelihood, std::size_t capacity) {
        ModelSpec spec;
        spec.likelihood = parse_likelihood(likelihood);
        spec.category_capacity = capacity;
        return ParamLayout(spec).dimension;
      },
      py::arg("likelihood"), py::arg("capacity"));

  m.def(
      "check_model_gradient",
      [](const std::string& likelihood, std::size_t capacity, const std::vector<CategoryCode>& codes,
         const std::vector<double>& targets, std::uint64_t seed) {
        ModelSpec spec;
        spec.likelihood = parse_likelihood(likelihood);
        spec.category_capacity = capacity;
        const LtvModel model(spec);
        std::vector<ObservationRow> rows;
        for (std::size_t i = 0; i < codes.size(); ++i) rows.push_back({codes[i], targets.at(i)});
        Rng rng(seed);
        return check_gradient(model.build_density(rows), model.sample_prior(rng)).max_rel_error;
      },
      py::arg("likelihood"), py::arg("capacity"), py::arg("codes"), py::arg("targets"), py::arg("seed") = 0,
      "Largest relative finite-difference gradient error at one prior draw.");

  m.def(
      "demo_spec", [](const std::string& name, std::uint64_t seed) {
        if (name == "mixed-tails") return to_json(demo_spec(seed)).dump();
        if (name == "pareto") return to_json(pareto_demo_spec(seed)).dump();
        if (name == "drift") return to_json(drift_demo_spec(36000, 15000, seed)).dump();
        throw ConfigError("name", "unknown demo '" + name + "'");
      },
      py::arg("name") = "mixed-tails", py::arg("seed") = 1, "Synthetic spec as JSON text.");

  m.def(
      "generate",
      [](const std::string& spec_json) {
        const auto spec = synth_spec_from_json(parse_json(spec_json));
        std::vector<std::string> categories;
        std::vector<double> targets;
        categories.reserve(spec.n_rows);
        targets.reserve(spec.n_rows);
        for_each_row(spec, [&](const RawRow& row) {
          categories.push_back(row.category);
          targets.push_back(row.target);
        });
        return py::make_tuple(categories, py::array_t<double>(targets.size(), targets.data()));
      },
      py::arg("spec_json"), "Rows of a synthetic spec as (categories, targets).");

  m.def(
      "default_run_config", []() { return to_json(RunConfig{}).dump(); }, "Default run configuration as JSON text.");

  m.def(
      "run",
      [](const std::string& config_json, bool verbose) {
        const auto config = run_config_from_json(parse_json(config_json));
        RunResult result;
        std::ostringstream log;
        {
          py::gil_scoped_release release;
          result = run_pipeline(config, verbose ? &log : nullptr);
        }
        if (verbose) py::print(log.str(), py::arg("end") = "");
        return run_result_to_dict(result);
      },
      py::arg("config_json"), py::arg("verbose") = false,
      "Runs the online pipeline described by a JSON run configuration.");
}
