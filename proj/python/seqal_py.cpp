#include "seqal/cli.hpp"
#include "seqal/config.hpp"
#include "seqal/crf.hpp"
#include "seqal/error.hpp"
#include "seqal/loop.hpp"
#include "seqal/report.hpp"
#include "seqal/strategies.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace seqal;

namespace {

Transitions make_transitions(const Matrix& pair, const Vector& start, const Vector& end) {
  return Transitions{pair, start, end};
}

ProbTensor tensor(const Matrix& probs) {
  ProbTensor t;
  t.probs = probs;
  t.valid_mask.assign(static_cast<std::size_t>(probs.rows()), true);
  return t;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["f1"] = m.f1;
  d["token_accuracy"] = m.token_accuracy;
  return d;
}

// config_json follows the run config format; relative corpus paths resolve
// against base_dir.
py::list run_experiment_json(const std::string& config_json, const std::string& base_dir) {
  const RunConfig rc = run_config_from_json(Json::parse(config_json), base_dir);
  const Corpus corpus = load_corpus(rc.corpus, rc.experiment.task);
  std::vector<RoundRecord> records;
  {
    py::gil_scoped_release release;
    records = run_experiment(corpus, rc.experiment);
  }
  py::list out;
  for (const auto& r : records) {
    py::dict d;
    d["round"] = r.round;
    d["selected"] = r.selected;
    d["n_labeled"] = r.n_labeled;
    d["test"] = metrics_dict(r.test);
    d["val_f1"] = r.val_f1;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the seqal active learning core";

  // Messages carry the kind prefix, e.g. "ConfigInvalid: ...".
  py::register_exception<Error>(m, "SeqalError", PyExc_RuntimeError);

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line interface; returns (exit_code, stdout, stderr).");

  m.def(
      "generate_conll",
      [](const std::string& spec_json) {
        const Corpus c = generate_synthetic(synth_spec_from_json(Json::parse(spec_json)));
        py::dict d;
        d["train"] = serialize_conll(c.train, c.scheme);
        d["val"] = serialize_conll(c.val, c.scheme);
        d["test"] = serialize_conll(c.test, c.scheme);
        return d;
      },
      py::arg("spec_json"));

  m.def("run_experiment", &run_experiment_json, py::arg("config_json"), py::arg("base_dir") = ".");

  m.def(
      "forward_backward",
      [](const Matrix& emissions, const Matrix& pair, const Vector& start, const Vector& end) {
        const auto fb = forward_backward(emissions, make_transitions(pair, start, end));
        return py::make_tuple(fb.log_partition, fb.marginals.probs);
      },
      py::arg("emissions"), py::arg("pair"), py::arg("start"), py::arg("end"));

  m.def(
      "viterbi",
      [](const Matrix& emissions, const Matrix& pair, const Vector& start, const Vector& end) {
        return viterbi(emissions, make_transitions(pair, start, end));
      },
      py::arg("emissions"), py::arg("pair"), py::arg("start"), py::arg("end"));

  m.def("score_least_confidence", [](const Matrix& p) { return score_least_confidence(tensor(p)); });
  m.def("score_mlc", [](const Matrix& p) { return score_mlc(tensor(p)); });
  m.def("score_margin", [](const Matrix& p) { return score_margin(tensor(p)); });
  m.def(
      "score_entropy", [](const Matrix& p, double eps) { return score_entropy(tensor(p), eps); }, py::arg("probs"),
      py::arg("epsilon") = 1e-12);
  m.def(
      "score_bald",
      [](const std::vector<Matrix>& passes, double eps) {
        std::vector<ProbTensor> t;
        for (const auto& p : passes) t.push_back(tensor(p));
        return score_bald(t, eps);
      },
      py::arg("passes"), py::arg("epsilon") = 1e-12);

  m.def("cluster_count", &cluster_count, py::arg("pool_size"), py::arg("n"));
  m.def("round_budget", &round_budget, py::arg("pool_size"), py::arg("fraction"));
  m.def("plan_budgets", &plan_budgets, py::arg("pool_size"), py::arg("fraction"), py::arg("rounds"));
  m.def("strategy_names", &strategy_names);
  m.def(
      "project_2d", [](const Matrix& rows) { return project_2d(rows).coords; }, py::arg("rows"));
}
