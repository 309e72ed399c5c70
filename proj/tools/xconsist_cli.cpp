// xconsist: command-line front end. Exit codes: 0 ok, 2 input/validation
// error, 3 numeric failure, 1 anything else.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "xconsist/commands.hpp"
#include "xconsist/errors.hpp"
#include "xconsist/io.hpp"
#include "xconsist/model.hpp"

namespace cmd = xconsist::commands;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw xconsist::ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void print_diagnostics(const xconsist::ValidationError& e) {
  for (const auto& d : e.diagnostics()) std::cerr << "error: " << d << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-task consistency toolkit"};
  app.require_subcommand(1);
  app.allow_extras(false);

  cmd::EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "C_k, rho_rank and preference accuracy for a task pair");
  evaluate->add_option("--samples", ev.samples, "samples.jsonl (repeatable)")->required();
  evaluate->add_option("--records", ev.records, "records.jsonl (repeatable)")->required();
  evaluate->add_option("--anchor", ev.anchor, "anchor task name")->required();
  evaluate->add_option("--eval", ev.eval, "evaluation task name")->required();
  evaluate->add_option("--k-max", ev.k_max, "largest difficulty k")->capture_default_str();
  evaluate->add_option("--out", ev.out, "output directory")->required();

  cmd::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo C1 sweep under an error model");
  simulate->add_option("--scenario", sim.scenario, "independent | same | different | all")
      ->capture_default_str();
  simulate->add_option("--grid-step", sim.grid_step, "accuracy grid spacing")->capture_default_str();
  simulate->add_option("--trials", sim.trials, "trials per cell")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "output directory")->required();

  cmd::CalibrateOptions cal;
  auto* calibrate = app.add_subcommand("calibrate", "Reliability map of likelihood vs quality");
  calibrate->add_option("--scores", cal.scores, "CSV: sample_id,loglik,quality")->required();
  calibrate->add_option("--bins", cal.bins, "number of equal-width bins")->capture_default_str();
  calibrate->add_option("--temperature", cal.temperature, "loglik divisor")->capture_default_str();
  calibrate->add_option("--quantile", cal.quantile, "lower quantile kept for the refit")
      ->capture_default_str();
  calibrate->add_option("--out", cal.out, "output directory")->required();

  cmd::GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Build contrast sets from captions and QA pairs");
  generate->add_option("--captions", gen.inputs.captions, "CSV: image_id,caption")->required();
  generate->add_option("--qa", gen.inputs.qa, "CSV: image_id,question,answer")->required();
  generate->add_option("--boxes", gen.inputs.boxes, "CSV: image_id,class,x,y,w,h")->required();
  generate->add_option("--answer-scores", gen.inputs.answer_scores, "TSV: image_id || question || answer, score")
      ->required();
  generate->add_option("--lm-scores", gen.inputs.lm_scores, "TSV: caption, score")->required();
  generate->add_option("--threshold", gen.threshold, "minimum LM score")->capture_default_str();
  generate->add_option("--max-k", gen.max_k, "maximum candidates per pivot")->capture_default_str();
  generate->add_option("--out", gen.out, "output directory")->required();

  std::filesystem::path toy_config, toy_out;
  auto* train_toy = app.add_subcommand("train-toy", "Train the synthetic two-head model, with baseline");
  train_toy->add_option("--config", toy_config, "JSON config (defaults when omitted)");
  train_toy->add_option("--out", toy_out, "output directory")->required();

  std::filesystem::path stats_samples;
  auto* stats = app.add_subcommand("stats", "Dataset statistics for a samples file");
  stats->add_option("--samples", stats_samples, "samples.jsonl")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*evaluate) {
      const auto r = cmd::evaluate(ev);
      std::printf("C1 = %s over %zu samples (skipped %zu); wrote %s\n",
                  r.consistency_at_k.count(1) ? std::to_string(r.consistency_at_k.at(1)).c_str()
                                              : "n/a",
                  r.n_samples_at_k.count(1) ? r.n_samples_at_k.at(1) : std::size_t{0}, r.skipped,
                  ev.out.string().c_str());
    } else if (*simulate) {
      const auto rows = cmd::simulate(sim);
      std::printf("%zu cells; wrote %s\n", rows.size(), sim.out.string().c_str());
    } else if (*calibrate) {
      const auto map = cmd::calibrate(cal);
      if (map.fit) {
        std::printf("slope %g intercept %g mse %g; wrote %s\n", map.fit->slope,
                    map.fit->intercept, map.fit->mse, cal.out.string().c_str());
      } else {
        std::printf("slope undefined; wrote %s\n", cal.out.string().c_str());
      }
    } else if (*generate) {
      const auto out = cmd::generate(gen);
      std::printf("%zu samples; wrote %s\n", out.samples.size(), gen.out.string().c_str());
    } else if (*train_toy) {
      const auto cfg = toy_config.empty() ? xconsist::toy::ExperimentConfig{}
                                          : xconsist::toy::read_experiment_config(read_text(toy_config));
      const auto c = cmd::train_toy(cfg, toy_out);
      std::fputs(cmd::comparison_to_csv(c).c_str(), stdout);
    } else if (*stats) {
      const auto samples = xconsist::read_samples_file(stats_samples);
      std::fputs(cmd::stats_table(xconsist::dataset_stats(samples)).c_str(), stdout);
    }
  } catch (const xconsist::ValidationError& e) {
    print_diagnostics(e);
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const xconsist::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
