#include "xconsist/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "xconsist/parallel.hpp"
#include "xconsist/rng.hpp"
#include "xconsist/text.hpp"

namespace xconsist {

std::string_view to_string(ErrorScenario scenario) {
  switch (scenario) {
    case ErrorScenario::IndependentErrors: return "independent";
    case ErrorScenario::SameErrors: return "same";
    case ErrorScenario::DifferentErrors: return "different";
  }
  return "independent";
}

ErrorScenario parse_scenario(std::string_view name) {
  if (name == "independent") return ErrorScenario::IndependentErrors;
  if (name == "same") return ErrorScenario::SameErrors;
  if (name == "different") return ErrorScenario::DifferentErrors;
  throw std::invalid_argument("unknown scenario '" + std::string(name) +
                              "' (expected independent, same or different)");
}

namespace {

void check_acc(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
  }
}

// One trial. Correctness of each task is an event of probability equal to
// its accuracy; the scenario fixes how the two events are coupled.
bool trial_consistent(ErrorScenario scenario, double a, double t, std::uint64_t seed,
                      std::uint64_t trial) {
  const double u = counter_uniform(seed, trial, 0);
  const bool anchor_correct = u < a;
  bool target_correct = false;
  switch (scenario) {
    case ErrorScenario::IndependentErrors:
      target_correct = counter_uniform(seed, trial, 1) < t;
      break;
    case ErrorScenario::SameErrors:
      // Comonotone: correct sets nested, overlap min(a, t).
      target_correct = u < t;
      break;
    case ErrorScenario::DifferentErrors:
      // Antitone: correct sets at opposite ends, overlap max(0, a + t - 1).
      target_correct = u >= 1.0 - t;
      break;
  }
  return anchor_correct == target_correct;
}

}  // namespace

double simulate_c1(const ErrorModelSpec& spec) {
  if (spec.trials == 0) throw std::invalid_argument("trials must be positive");
  check_acc(spec.anchor_acc, "anchor_acc");
  check_acc(spec.target_acc, "target_acc");
  const unsigned workers = worker_count();
  std::vector<std::uint64_t> counts(std::max<std::size_t>(1, workers), 0);
  parallel_chunks(
      spec.trials,
      [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        std::uint64_t hits = 0;
        for (std::size_t i = begin; i < end; ++i) {
          hits += trial_consistent(spec.scenario, spec.anchor_acc, spec.target_acc, spec.seed, i);
        }
        counts[chunk] = hits;
      },
      workers);
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  return static_cast<double>(total) / static_cast<double>(spec.trials);
}

double closed_form_c1(ErrorScenario scenario, double a, double t) {
  check_acc(a, "anchor_acc");
  check_acc(t, "target_acc");
  switch (scenario) {
    case ErrorScenario::IndependentErrors:
      return a * t + (1.0 - a) * (1.0 - t);
    case ErrorScenario::SameErrors:
      return 1.0 - std::abs(a - t);
    case ErrorScenario::DifferentErrors:
      return std::max(0.0, a + t - 1.0) + std::max(0.0, 1.0 - a - t);
  }
  return 0.0;
}

std::vector<double> accuracy_grid(double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 0.5)) {
    throw std::invalid_argument("grid_step must satisfy 0 < grid_step <= 0.5");
  }
  std::vector<double> grid;
  for (std::size_t i = 0;; ++i) {
    const double v = static_cast<double>(i) * grid_step;
    if (v > 1.0 + 1e-9) break;
    grid.push_back(std::min(v, 1.0));
  }
  // Snap values that are 1 up to rounding.
  if (std::abs(grid.back() - 1.0) < 1e-9) {
    grid.back() = 1.0;
  } else {
    grid.push_back(1.0);
  }
  // Round away representation noise (e.g. 0.30000000000000004).
  for (double& v : grid) v = std::round(v * 1e12) / 1e12;
  return grid;
}

std::vector<SweepRow> sweep(ErrorScenario scenario, double grid_step, std::uint64_t trials,
                            std::uint64_t seed) {
  const auto grid = accuracy_grid(grid_step);
  std::vector<SweepRow> rows;
  rows.reserve(grid.size() * grid.size());
  for (double a : grid) {
    for (double t : grid) {
      const double mc = simulate_c1({scenario, a, t, trials, seed});
      rows.push_back({scenario, a, t, mc, closed_form_c1(scenario, a, t), trials, seed});
    }
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "scenario,anchor_acc,target_acc,c1_mc,c1_closed,trials,seed\n";
  for (const auto& r : rows) {
    os << to_string(r.scenario) << ',' << format_real(r.anchor_acc) << ','
       << format_real(r.target_acc) << ',' << format_real(r.c1_mc) << ','
       << format_real(r.c1_closed) << ',' << r.trials << ',' << r.seed << '\n';
  }
  return os.str();
}

}  // namespace xconsist
