#include "xconsist/commands.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "xconsist/io.hpp"
#include "xconsist/svg.hpp"
#include "xconsist/text.hpp"

namespace xconsist::commands {

std::string ck_curve_svg(const ConsistencyReport& report) {
  svg::Series c{"consistency", {}, {}}, acc{"preference accuracy (" + report.evaluation + ")", {}, {}};
  for (int k = 1; k <= report.k_max; ++k) {
    const double nan = std::nan("");
    auto get = [&](const std::map<int, double>& m) {
      auto it = m.find(k);
      return it == m.end() ? nan : it->second;
    };
    c.x.push_back(k);
    c.y.push_back(get(report.consistency_at_k));
    acc.x.push_back(k);
    acc.y.push_back(get(report.preference_accuracy_at_k));
  }
  return svg::line_chart(report.anchor + " vs " + report.evaluation, "difficulty k",
                         "fraction", {c, acc}, std::make_pair(0.0, 1.0));
}

ConsistencyReport write_evaluation(const EvaluationBundle& bundle, const std::string& anchor,
                                   const std::string& eval, int k_max, const fs::path& out) {
  const auto report = build_report(bundle, anchor, eval, k_max);
  write_file_atomic(out / "report.json", report_to_json(report));
  write_file_atomic(out / "ck_curve.csv", report_to_ck_csv(report));
  write_file_atomic(out / "scatter.csv", report_to_scatter_csv(report));
  write_file_atomic(out / "ck_curve.svg", ck_curve_svg(report));
  return report;
}

ConsistencyReport evaluate(const EvaluateOptions& o) {
  if (o.k_max < 1) throw ValidationError("--k-max must be >= 1");
  const auto bundle = parse_bundle(o.samples, o.records, o.anchor);
  return write_evaluation(bundle, o.anchor, o.eval, o.k_max, o.out);
}

std::vector<SweepRow> simulate(const SimulateOptions& o) {
  std::vector<ErrorScenario> scenarios;
  if (o.scenario == "all") {
    scenarios = {ErrorScenario::IndependentErrors, ErrorScenario::SameErrors,
                 ErrorScenario::DifferentErrors};
  } else {
    scenarios = {parse_scenario(o.scenario)};
  }
  const auto grid = accuracy_grid(o.grid_step);
  std::vector<SweepRow> all;
  for (auto sc : scenarios) {
    auto rows = sweep(sc, o.grid_step, o.trials, o.seed);
    // Anchor-major: row block per anchor accuracy.
    std::vector<std::vector<double>> values(grid.size(), std::vector<double>(grid.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) values[i / grid.size()][i % grid.size()] = rows[i].c1_mc;
    write_file_atomic(o.out / ("heatmap_" + std::string(to_string(sc)) + ".svg"),
                      svg::heatmap("C1 under " + std::string(to_string(sc)) + " errors",
                                   "target accuracy", "anchor accuracy", grid, grid, values));
    all.insert(all.end(), rows.begin(), rows.end());
  }
  write_file_atomic(o.out / "sweep.csv", sweep_to_csv(all));
  return all;
}

ReliabilityMap calibrate(const CalibrateOptions& o) {
  const auto data = temperature_scale(read_scores_csv(o.scores), o.temperature);
  auto map = reliability_map(data, o.bins);
  std::optional<LinearFit> qfit;
  try {
    qfit = quantile_fit(data, o.quantile, o.bins);
  } catch (const ValidationError&) {
    if (!(o.quantile > 0.0 && o.quantile <= 1.0)) throw;
  }
  write_file_atomic(o.out / "reliability.json",
                    reliability_to_json(map, o.temperature, qfit, o.quantile));
  std::vector<double> xs, ys;
  for (std::size_t b = 0; b < map.bin_count.size(); ++b) {
    if (map.bin_count[b] == 0) continue;
    xs.push_back(map.bin_mean_loglik[b]);
    ys.push_back(map.bin_mean_quality[b]);
  }
  std::optional<std::pair<double, double>> line;
  if (map.fit) line = std::make_pair(map.fit->slope, map.fit->intercept);
  write_file_atomic(o.out / "reliability.svg",
                    svg::scatter_with_fit("reliability (t = " + format_real(o.temperature) + ")",
                                          "mean log-likelihood", "mean quality", xs, ys, line));
  return map;
}

congen::PipelineOutput generate(const GenerateOptions& o) {
  congen::PipelineConfig cfg;
  cfg.threshold = o.threshold;
  cfg.max_k = o.max_k;
  const auto out = congen::run_pipeline(congen::load_inputs(o.inputs), cfg);
  std::ostringstream samples;
  write_samples(samples, out.samples);
  write_file_atomic(o.out / "samples.jsonl", samples.str());
  write_file_atomic(o.out / "provenance.jsonl", congen::provenance_to_jsonl(out.provenance));
  return out;
}

std::string comparison_to_csv(const ToyComparison& c) {
  std::ostringstream os;
  os << "arm,lambda,gamma,c1,eval_accuracy,anchor_accuracy,rho_rank\n";
  auto row = [&](const char* name, double lambda, const toy::ArmResult& r) {
    os << name << ',' << format_real(lambda) << ',' << format_real(c.gamma) << ','
       << format_real(r.c1) << ',' << format_real(r.eval_accuracy) << ','
       << format_real(r.anchor_accuracy) << ',' << format_real(r.rho) << '\n';
  };
  row("baseline", 0.0, c.baseline);
  row("consistency", c.lambda, c.consistency);
  return os.str();
}

ToyComparison train_toy(const toy::ExperimentConfig& config, const fs::path& out) {
  auto records_jsonl = [](const EvaluationBundle& b) {
    std::ostringstream os;
    write_bundle_records(os, b);
    return os.str();
  };
  const auto run = toy::run_experiment(config, config.seed);
  toy::ExperimentConfig base_cfg = config;
  base_cfg.train.lambda = 0.0;
  const auto base = toy::run_experiment(base_cfg, config.seed);

  write_file_atomic(out / "config.json", toy::experiment_config_to_json(config));
  write_file_atomic(out / "step_log.csv", toy::step_log_to_csv(run.trained.log));
  std::ostringstream samples;
  write_bundle_samples(samples, run.bundle);
  write_file_atomic(out / "samples.jsonl", samples.str());
  write_file_atomic(out / "records.jsonl", records_jsonl(run.bundle));
  write_evaluation(run.bundle, toy::task_name(0), toy::task_name(1), 1, out);

  write_file_atomic(out / "baseline" / "step_log.csv", toy::step_log_to_csv(base.trained.log));
  write_file_atomic(out / "baseline" / "records.jsonl", records_jsonl(base.bundle));
  write_file_atomic(out / "baseline" / "report.json", report_to_json(base.report));

  ToyComparison c{run.summary, base.summary, config.train.lambda, config.train.gamma};
  write_file_atomic(out / "comparison.csv", comparison_to_csv(c));
  return c;
}

std::string stats_table(const DatasetStats& s) {
  std::ostringstream os;
  char buf[128];
  auto line = [&](const char* name, const std::string& v) {
    std::snprintf(buf, sizeof buf, "%-26s %s\n", name, v.c_str());
    os << buf;
  };
  line("samples", std::to_string(s.samples));
  line("contrast_sets", std::to_string(s.contrast_sets));
  char mean[32];
  std::snprintf(mean, sizeof mean, "%.4f", s.mean_contrasts_per_sample);
  line("mean_contrasts_per_sample", mean);
  line("with_vqa", std::to_string(s.with_vqa));
  line("with_localization", std::to_string(s.with_localization));
  line("with_generation", std::to_string(s.with_generation));
  os << '\n';
  std::snprintf(buf, sizeof buf, "%-12s %8s %10s\n", "category", "samples", "contrasts");
  os << buf;
  for (auto cat : kAllCategories) {
    CategoryCount cc;
    if (auto it = s.per_category.find(cat); it != s.per_category.end()) cc = it->second;
    std::snprintf(buf, sizeof buf, "%-12s %8zu %10zu\n", std::string(to_string(cat)).c_str(),
                  cc.samples, cc.contrasts);
    os << buf;
  }
  return os.str();
}

}  // namespace xconsist::commands
