#pragma once

// Artifact-producing entry points behind each CLI subcommand. Each writes its
// files atomically under `out` (created if absent) and returns what it wrote.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xconsist/calibration.hpp"
#include "xconsist/congen.hpp"
#include "xconsist/metrics.hpp"
#include "xconsist/simulator.hpp"
#include "xconsist/toytrain.hpp"

namespace xconsist::commands {

namespace fs = std::filesystem;

struct EvaluateOptions {
  std::vector<fs::path> samples;
  std::vector<fs::path> records;
  std::string anchor;
  std::string eval;
  int k_max = 5;
  fs::path out;
};

// report.json, ck_curve.csv, scatter.csv, ck_curve.svg.
ConsistencyReport write_evaluation(const EvaluationBundle& bundle, const std::string& anchor,
                                   const std::string& eval, int k_max, const fs::path& out);
ConsistencyReport evaluate(const EvaluateOptions& options);

std::string ck_curve_svg(const ConsistencyReport& report);

struct SimulateOptions {
  std::string scenario = "independent";  // or "all"
  double grid_step = 0.1;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 0;
  fs::path out;
};

// sweep.csv plus heatmap_<scenario>.svg per scenario.
std::vector<SweepRow> simulate(const SimulateOptions& options);

struct CalibrateOptions {
  fs::path scores;
  std::size_t bins = 10;
  double temperature = 1.0;
  double quantile = 0.95;
  fs::path out;
};

// reliability.json and reliability.svg. The quantile refit is reported as
// null when fewer than two points survive or its slope is undefined.
ReliabilityMap calibrate(const CalibrateOptions& options);

struct GenerateOptions {
  congen::PipelinePaths inputs;
  double threshold = 0.0;
  std::size_t max_k = 5;
  fs::path out;
};

// samples.jsonl and provenance.jsonl.
congen::PipelineOutput generate(const GenerateOptions& options);

struct ToyComparison {
  toy::ArmResult consistency;  // configured arm
  toy::ArmResult baseline;     // same seed, lambda = 0
  double lambda = 0.0;
  double gamma = 0.0;
};

std::string comparison_to_csv(const ToyComparison& comparison);

// Trains the configured arm and a lambda = 0 baseline with the same seed.
// Writes config.json, step_log.csv, samples.jsonl, records.jsonl, the
// evaluation artifacts, baseline/{step_log.csv,records.jsonl,report.json}
// and comparison.csv.
ToyComparison train_toy(const toy::ExperimentConfig& config, const fs::path& out);

// Plain-text table of dataset_stats.
std::string stats_table(const DatasetStats& stats);

}  // namespace xconsist::commands
