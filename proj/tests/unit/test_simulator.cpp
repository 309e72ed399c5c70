#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "xconsist/parallel.hpp"
#include "xconsist/rng.hpp"
#include "xconsist/simulator.hpp"

using namespace xconsist;

namespace {

// Agreement as P(both right) + P(both wrong), written from the overlap of the
// correct sets rather than from the library's expressions.
double overlap_oracle(ErrorScenario s, double a, double t) {
  double both_right = 0.0;
  switch (s) {
    case ErrorScenario::IndependentErrors: both_right = a * t; break;
    case ErrorScenario::SameErrors: both_right = std::min(a, t); break;
    case ErrorScenario::DifferentErrors: both_right = std::max(0.0, a + t - 1.0); break;
  }
  return both_right + (1.0 - a - t + both_right);
}

}  // namespace

TEST_CASE("closed forms agree with the overlap construction") {
  for (auto s : {ErrorScenario::IndependentErrors, ErrorScenario::SameErrors,
                 ErrorScenario::DifferentErrors}) {
    for (int i = 0; i <= 20; ++i) {
      for (int j = 0; j <= 20; ++j) {
        const double a = i / 20.0, t = j / 20.0;
        CHECK(closed_form_c1(s, a, t) == doctest::Approx(overlap_oracle(s, a, t)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("a perfect anchor makes consistency equal the target accuracy") {
  for (auto s : {ErrorScenario::IndependentErrors, ErrorScenario::SameErrors,
                 ErrorScenario::DifferentErrors}) {
    for (double t : {0.0, 0.3, 0.55, 1.0}) {
      CHECK(closed_form_c1(s, 1.0, t) == doctest::Approx(t).epsilon(1e-12));
      CHECK(simulate_c1({s, 1.0, t, 20000, 4}) == doctest::Approx(t).epsilon(0.02));
    }
  }
}

TEST_CASE("Monte-Carlo estimate converges to the closed form") {
  for (auto s : {ErrorScenario::IndependentErrors, ErrorScenario::SameErrors,
                 ErrorScenario::DifferentErrors}) {
    const double mc = simulate_c1({s, 0.7, 0.4, 200000, 1});
    CHECK(std::abs(mc - closed_form_c1(s, 0.7, 0.4)) < 0.005);
  }
}

TEST_CASE("degenerate cells are exact") {
  for (auto s : {ErrorScenario::IndependentErrors, ErrorScenario::SameErrors,
                 ErrorScenario::DifferentErrors}) {
    CHECK(simulate_c1({s, 0.0, 0.0, 1000, 9}) == 1.0);
    CHECK(simulate_c1({s, 1.0, 1.0, 1000, 9}) == 1.0);
  }
}

TEST_CASE("results are bit-identical across seeds reuse and thread counts") {
  const ErrorModelSpec spec{ErrorScenario::IndependentErrors, 0.6, 0.8, 50000, 123};
  const double first = simulate_c1(spec);
  CHECK(simulate_c1(spec) == first);
  ::setenv("XCONSIST_THREADS", "1", 1);
  const double one = simulate_c1(spec);
  ::setenv("XCONSIST_THREADS", "7", 1);
  const double seven = simulate_c1(spec);
  ::unsetenv("XCONSIST_THREADS");
  CHECK(one == first);
  CHECK(seven == first);
  CHECK(simulate_c1({ErrorScenario::IndependentErrors, 0.6, 0.8, 50000, 124}) != first);
}

TEST_CASE("invalid specs") {
  CHECK_THROWS_AS(simulate_c1({ErrorScenario::SameErrors, 0.5, 0.5, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(simulate_c1({ErrorScenario::SameErrors, 1.5, 0.5, 10, 0}), std::invalid_argument);
  CHECK_THROWS_AS(accuracy_grid(0.0), std::invalid_argument);
  CHECK_THROWS_AS(accuracy_grid(0.6), std::invalid_argument);
  CHECK_THROWS(parse_scenario("sideways"));
}

TEST_CASE("grid and sweep layout") {
  const auto g = accuracy_grid(0.1);
  REQUIRE(g.size() == 11);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  const auto g3 = accuracy_grid(0.3);
  CHECK(g3.back() == 1.0);

  const auto rows = sweep(ErrorScenario::SameErrors, 0.5, 100, 2);
  REQUIRE(rows.size() == 9);
  CHECK(rows[1].anchor_acc == 0.0);
  CHECK(rows[1].target_acc == 0.5);
  CHECK(rows[3].anchor_acc == 0.5);
  CHECK(sweep_to_csv(rows).rfind("scenario,anchor_acc,target_acc,c1_mc,c1_closed,trials,seed\n", 0) == 0);
}

TEST_CASE("counter stream is order independent") {
  CHECK(counter_bits(1, 2, 3) == counter_bits(1, 2, 3));
  CHECK(counter_bits(1, 2, 3) != counter_bits(1, 2, 4));
  CHECK(counter_bits(1, 2, 3) != counter_bits(1, 3, 3));
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double u = counter_uniform(5, 0, i);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
