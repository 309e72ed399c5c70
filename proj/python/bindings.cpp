#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "xconsist/calibration.hpp"
#include "xconsist/commands.hpp"
#include "xconsist/congen.hpp"
#include "xconsist/io.hpp"
#include "xconsist/metrics.hpp"
#include "xconsist/model.hpp"
#include "xconsist/simulator.hpp"
#include "xconsist/softrank.hpp"
#include "xconsist/toytrain.hpp"

namespace py = pybind11;
using namespace xconsist;

namespace {

RankDirection parse_direction(const std::string& d) {
  if (d == "higher_lower") return RankDirection::HigherScoreLowerRank;
  if (d == "higher_higher") return RankDirection::HigherScoreHigherRank;
  throw std::invalid_argument("direction must be 'higher_lower' or 'higher_higher'");
}

}  // namespace

PYBIND11_MODULE(_xconsist, m) {
  m.doc() = "Cross-task consistency toolkit (native core)";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  // --- metrics -------------------------------------------------------------
  m.def(
      "evaluate_files",
      [](const std::vector<std::filesystem::path>& samples,
         const std::vector<std::filesystem::path>& records, const std::string& anchor,
         const std::string& eval, int k_max, bool pooled) {
        const auto bundle = parse_bundle(samples, records, anchor);
        return report_to_json(build_report(
            bundle, anchor, eval, k_max,
            pooled ? RhoAggregation::Pooled : RhoAggregation::PerSampleMean));
      },
      py::arg("samples"), py::arg("records"), py::arg("anchor"), py::arg("eval"),
      py::arg("k_max") = 5, py::arg("pooled_rho") = false,
      "Consistency report for an anchor/eval pair, as a JSON string.");
  m.def(
      "dataset_stats_file",
      [](const std::filesystem::path& samples) {
        const auto s = dataset_stats(read_samples_file(samples));
        py::dict per;
        for (const auto& [cat, cc] : s.per_category) {
          per[py::str(std::string(to_string(cat)))] = py::make_tuple(cc.samples, cc.contrasts);
        }
        py::dict d;
        d["samples"] = s.samples;
        d["contrast_sets"] = s.contrast_sets;
        d["mean_contrasts_per_sample"] = s.mean_contrasts_per_sample;
        d["with_vqa"] = s.with_vqa;
        d["with_localization"] = s.with_localization;
        d["with_generation"] = s.with_generation;
        d["per_category"] = per;
        return d;
      },
      py::arg("samples"));
  m.def(
      "spearman",
      [](const std::vector<double>& a, const std::vector<double>& b) { return spearman(a, b); },
      py::arg("a"), py::arg("b"));

  // --- soft rank -----------------------------------------------------------
  m.def(
      "soft_rank",
      [](const std::vector<double>& s, double eps, const std::string& dir) {
        return soft_rank(s, {eps, parse_direction(dir)});
      },
      py::arg("scores"), py::arg("epsilon") = 1.0, py::arg("direction") = "higher_lower",
      "Projection of scores/epsilon onto the permutahedron; rank 1 is best.");
  m.def(
      "soft_rank_jacobian",
      [](const std::vector<double>& s, double eps, const std::string& dir) {
        const auto j = soft_rank_jacobian(s, {eps, parse_direction(dir)});
        const auto flat = j.dense();
        const std::size_t n = j.size();
        std::vector<std::vector<double>> rows(n, std::vector<double>(n));
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c < n; ++c) rows[r][c] = flat[r * n + c];
        return rows;
      },
      py::arg("scores"), py::arg("epsilon") = 1.0, py::arg("direction") = "higher_lower");
  m.def(
      "consistency_loss",
      [](const std::vector<double>& a, const std::vector<double>& b, double eps,
         const std::string& dir) {
        const auto r = consistency_loss(a, b, {eps, parse_direction(dir)});
        return py::make_tuple(r.loss, r.grad_anchor, r.grad_eval);
      },
      py::arg("anchor_scores"), py::arg("eval_scores"), py::arg("epsilon") = 1.0,
      py::arg("direction") = "higher_lower", "Returns (loss, grad_anchor, grad_eval).");

  // --- simulator -----------------------------------------------------------
  m.def(
      "simulate_c1",
      [](const std::string& scenario, double a, double t, std::uint64_t trials,
         std::uint64_t seed) {
        return simulate_c1({parse_scenario(scenario), a, t, trials, seed});
      },
      py::arg("scenario"), py::arg("anchor_acc"), py::arg("target_acc"),
      py::arg("trials") = 100000, py::arg("seed") = 0);
  m.def(
      "closed_form_c1",
      [](const std::string& scenario, double a, double t) {
        return closed_form_c1(parse_scenario(scenario), a, t);
      },
      py::arg("scenario"), py::arg("anchor_acc"), py::arg("target_acc"));
  m.def(
      "sweep_csv",
      [](const std::string& scenario, double step, std::uint64_t trials, std::uint64_t seed) {
        return sweep_to_csv(sweep(parse_scenario(scenario), step, trials, seed));
      },
      py::arg("scenario"), py::arg("grid_step") = 0.1, py::arg("trials") = 100000,
      py::arg("seed") = 0);

  // --- calibration ---------------------------------------------------------
  m.def(
      "reliability_json",
      [](const std::vector<double>& loglik, const std::vector<double>& quality, std::size_t bins,
         double temperature, double quantile) {
        if (loglik.size() != quality.size()) {
          throw ValidationError("loglik and quality must have equal length");
        }
        std::vector<ScoredPrediction> data;
        for (std::size_t i = 0; i < loglik.size(); ++i) {
          data.push_back({std::to_string(i), loglik[i], quality[i]});
        }
        data = temperature_scale(data, temperature);
        const auto map = reliability_map(data, bins);
        std::optional<LinearFit> q;
        try {
          q = quantile_fit(data, quantile, bins);
        } catch (const ValidationError&) {
        }
        return reliability_to_json(map, temperature, q, quantile);
      },
      py::arg("loglik"), py::arg("quality"), py::arg("bins") = 10, py::arg("temperature") = 1.0,
      py::arg("quantile") = 0.95);

  // --- congen --------------------------------------------------------------
  m.def("normalized_words", &congen::normalized_words, py::arg("text"));
  m.def(
      "generate",
      [](const std::filesystem::path& captions, const std::filesystem::path& qa,
         const std::filesystem::path& boxes, const std::filesystem::path& answer_scores,
         const std::filesystem::path& lm_scores, double threshold, std::size_t max_k,
         const std::filesystem::path& out) {
        commands::GenerateOptions o;
        o.inputs = {captions, qa, boxes, answer_scores, lm_scores};
        o.threshold = threshold;
        o.max_k = max_k;
        o.out = out;
        return commands::generate(o).samples.size();
      },
      py::arg("captions"), py::arg("qa"), py::arg("boxes"), py::arg("answer_scores"),
      py::arg("lm_scores"), py::arg("threshold") = 0.0, py::arg("max_k") = 5, py::arg("out"),
      "Writes samples.jsonl and provenance.jsonl under out; returns the sample count.");

  // --- toy training --------------------------------------------------------
  m.def("default_toy_config", [] { return toy::experiment_config_to_json({}); });
  m.def(
      "train_toy",
      [](const std::string& config_json, std::uint64_t seed) {
        auto cfg = config_json.empty() ? toy::ExperimentConfig{}
                                       : toy::read_experiment_config(config_json);
        toy::ExperimentRun run;
        {
          py::gil_scoped_release release;
          run = toy::run_experiment(cfg, seed);
        }
        py::dict d;
        d["c1"] = run.summary.c1;
        d["eval_accuracy"] = run.summary.eval_accuracy;
        d["anchor_accuracy"] = run.summary.anchor_accuracy;
        d["rho_rank"] = run.summary.rho;
        d["steps"] = run.trained.log.size();
        d["step_log_csv"] = toy::step_log_to_csv(run.trained.log);
        return d;
      },
      py::arg("config_json") = "", py::arg("seed") = 1);
}
