#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xconsist {

enum class ErrorScenario {
  IndependentErrors,
  // Correct sets overlap maximally.
  SameErrors,
  // Correct sets overlap minimally.
  DifferentErrors,
};

std::string_view to_string(ErrorScenario scenario);
// Accepts "independent", "same", "different".
ErrorScenario parse_scenario(std::string_view name);

struct ErrorModelSpec {
  ErrorScenario scenario = ErrorScenario::IndependentErrors;
  double anchor_acc = 0.5;
  double target_acc = 0.5;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 0;
};

// Monte-Carlo estimate of top-1 consistency: the fraction of trials where the
// anchor and target are both correct or both wrong. Bit-identical for a given
// spec regardless of thread count. Throws std::invalid_argument on trials == 0
// or accuracies outside [0, 1].
double simulate_c1(const ErrorModelSpec& spec);

double closed_form_c1(ErrorScenario scenario, double anchor_acc, double target_acc);

struct SweepRow {
  ErrorScenario scenario;
  double anchor_acc;
  double target_acc;
  double c1_mc;
  double c1_closed;
  std::uint64_t trials;
  std::uint64_t seed;
};

// Grid {0, step, 2*step, ..., 1}; 1 is appended when step does not divide it.
std::vector<double> accuracy_grid(double grid_step);

// Every (anchor, target) grid cell, anchor-major. Throws std::invalid_argument
// unless 0 < grid_step <= 0.5.
std::vector<SweepRow> sweep(ErrorScenario scenario, double grid_step, std::uint64_t trials,
                            std::uint64_t seed);

// CSV with header scenario,anchor_acc,target_acc,c1_mc,c1_closed,trials,seed.
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace xconsist
