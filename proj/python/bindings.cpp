#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>
#include <sstream>

#include "dafd/cli.hpp"
#include "dafd/dann.hpp"
#include "dafd/error.hpp"
#include "dafd/eval.hpp"
#include "dafd/nn/checkpoint.hpp"
#include "dafd/nn/gradcheck.hpp"
#include "dafd/signal.hpp"

namespace py = pybind11;
using namespace dafd;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

TrialRecord trial_from_array(const Array& samples, double rate_hz) {
  if (samples.ndim() != 2 || samples.shape(1) != 3) throw py::value_error("samples must have shape (n, 3)");
  TrialRecord t;
  t.trial_id = "py";
  t.subject_id = "py";
  t.dataset_id = "py";
  t.position = "py";
  t.activity_code = "A1";
  t.sample_rate_hz = rate_hz;
  const auto r = samples.unchecked<2>();
  for (py::ssize_t i = 0; i < r.shape(0); ++i) t.samples.push_back({r(i, 0), r(i, 1), r(i, 2)});
  return t;
}

Array segment_array(const Segment& s) {
  Array out({3, s.length});
  std::copy(s.values.begin(), s.values.end(), out.mutable_data());
  return out;
}

nn::Tensor batch_from_array(const Array& segments) {
  if (segments.ndim() != 3 || segments.shape(1) != nn::kInputChannels || segments.shape(2) != nn::kInputLength) {
    throw py::value_error("segments must have shape (n, 3, 66)");
  }
  nn::Tensor t({static_cast<std::size_t>(segments.shape(0)), nn::kInputChannels, nn::kInputLength});
  std::copy(segments.data(), segments.data() + segments.size(), t.values.begin());
  return t;
}

nn::ModelParams params_from(const py::object& model) {
  if (py::isinstance<py::int_>(model)) return nn::ModelParams::init(model.cast<std::uint64_t>());
  return nn::load_checkpoint(model.cast<std::string>()).params;
}

py::dict metrics_dict(const MetricSet& m) {
  py::dict d;
  d["sen"] = m.sen;
  d["spe"] = m.spe;
  d["pre"] = m.pre;
  d["f1"] = m.f1;
  d["sen_degenerate"] = m.sen_degenerate;
  d["spe_degenerate"] = m.spe_degenerate;
  d["pre_degenerate"] = m.pre_degenerate;
  d["f1_degenerate"] = m.f1_degenerate;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Domain-adaptive fall detection core";
  m.attr("__version__") = cli::kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def(
      "rational_factor",
      [](double source_hz, double target_hz) {
        const ResampleFactor f = rational_factor(source_hz, target_hz);
        return py::make_tuple(f.p(), f.q());
      },
      py::arg("source_hz"), py::arg("target_hz") = 18.4);

  m.def(
      "preprocess",
      [](const Array& samples, double rate_hz, double target_hz) {
        return segment_array(preprocess(trial_from_array(samples, rate_hz), target_hz, WindowConfig{}));
      },
      py::arg("samples"), py::arg("rate_hz"), py::arg("target_hz") = 18.4,
      "Resample, cut the 66-sample impact window and min-max normalize; returns (3, 66).");

  m.def(
      "metrics",
      [](std::int64_t tp, std::int64_t tn, std::int64_t fp, std::int64_t fn) {
        return metrics_dict(metrics({tp, tn, fp, fn}));
      },
      py::arg("tp"), py::arg("tn"), py::arg("fp"), py::arg("fn"));

  m.def(
      "ttest",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const TTest r = ttest(a, b);
        return py::make_tuple(r.t, r.p, r.significant);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "enumerate_pairs",
      [](const std::string& scenario, const std::string& dataset) {
        std::vector<std::string> ids;
        for (const auto& p : enumerate_pairs(parse_scenario(scenario), dataset)) ids.push_back(p.id());
        return ids;
      },
      py::arg("scenario"), py::arg("dataset") = "");

  m.def("grid_tuples", [] {
    std::vector<py::tuple> out;
    for (const auto& hp : grid_tuples()) out.push_back(py::make_tuple(hp.dropout, hp.lr, hp.lambda));
    return out;
  });

  m.def(
      "features",
      [](const Array& segments, const py::object& model) {
        const nn::Tensor f = nn::extract_features(params_from(model), batch_from_array(segments));
        Array out({f.dim(0), f.dim(1)});
        std::copy(f.values.begin(), f.values.end(), out.mutable_data());
        return out;
      },
      py::arg("segments"), py::arg("model") = 0,
      "40-dimensional extractor features; model is an init seed or a checkpoint path.");

  m.def(
      "grad_check",
      [](std::uint64_t seed, double lambda) {
        const nn::GradCheckResult r =
            nn::grad_check(nn::ModelParams::init(derive_seed(seed, 0)), [&] {
              nn::Tensor t({4, nn::kInputChannels, nn::kInputLength});
              std::mt19937_64 rng(derive_seed(seed, 1));
              std::uniform_real_distribution<double> u(0.0, 1.0);
              for (double& v : t.values) v = u(rng);
              return t;
            }(), nn::default_check_targets(4), lambda);
        return py::make_tuple(r.max_rel_error, r.worst_param);
      },
      py::arg("seed") = 0, py::arg("lam") = 1.0);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::dispatch(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one CLI subcommand; returns (exit_code, stdout, stderr).");
}
