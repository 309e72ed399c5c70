#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "xconsist/calibration.hpp"
#include "xconsist/errors.hpp"

using namespace xconsist;

TEST_CASE("exact-linear fixture recovers slope and intercept") {
  const auto data = read_scores_csv(fixture("calibration/linear.csv"));
  REQUIRE(data.size() == 40);
  const auto map = reliability_map(data, 10);
  REQUIRE(map.fit.has_value());
  CHECK(map.fit->slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(map.fit->intercept == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(map.fit->mse < 1e-12);

  std::vector<double> x, y;
  for (const auto& p : data) {
    x.push_back(p.loglik);
    y.push_back(p.quality);
  }
  const auto [slope, intercept] = oracle::least_squares(x, y);
  const auto per = reliability_map(data, 10, FitMode::PerSample);
  CHECK(per.fit->slope == doctest::Approx(slope).epsilon(1e-12));
  CHECK(per.fit->intercept == doctest::Approx(intercept).epsilon(1e-12));
}

TEST_CASE("temperature 1 is the identity, byte for byte") {
  const auto data = read_scores_csv(fixture("calibration/outliers.csv"));
  const auto scaled = temperature_scale(data, 1.0);
  CHECK(scaled == data);
  CHECK(reliability_to_json(reliability_map(scaled), 1.0, std::nullopt, 0.95) ==
        reliability_to_json(reliability_map(data), 1.0, std::nullopt, 0.95));
  CHECK_THROWS_AS(temperature_scale(data, 0.0), ValidationError);
}

TEST_CASE("temperature divides log-likelihoods") {
  const std::vector<ScoredPrediction> d{{"a", -2.0, 1.0}, {"b", -4.0, 0.0}};
  const auto s = temperature_scale(d, 2.0);
  CHECK(s[0].loglik == -1.0);
  CHECK(s[1].loglik == -2.0);
  CHECK(s[1].quality == 0.0);
}

TEST_CASE("quantile refit strictly lowers error on the outlier fixture") {
  const auto data = read_scores_csv(fixture("calibration/outliers.csv"));
  const auto full = reliability_map(data, 10, FitMode::PerSample);
  const auto q = quantile_fit(data, 0.95, 10, FitMode::PerSample);
  REQUIRE(full.fit.has_value());
  CHECK(q.mse < full.fit->mse);
  CHECK(q.points == 95);
  CHECK(lower_quantile(data, 0.95).size() == 95);
  CHECK_THROWS_AS(quantile_fit(data, 0.0), ValidationError);
  CHECK_THROWS_AS(quantile_fit(data, 1.5), ValidationError);
}

TEST_CASE("interior edges go to the lower bin, the maximum to the last") {
  const std::vector<double> edges{0.0, 1.0, 2.0, 3.0};
  CHECK(bin_index(edges, 0.0) == 0);
  CHECK(bin_index(edges, 1.0) == 0);
  CHECK(bin_index(edges, 1.5) == 1);
  CHECK(bin_index(edges, 2.0) == 1);
  CHECK(bin_index(edges, 3.0) == 2);
}

TEST_CASE("bins, counts and cumulative fraction") {
  std::vector<ScoredPrediction> d;
  for (int i = 0; i <= 10; ++i) d.push_back({std::to_string(i), static_cast<double>(i), 1.0});
  const auto m = reliability_map(d, 5);
  REQUIRE(m.bin_edges.size() == 6);
  CHECK(m.bin_edges.front() == 0.0);
  CHECK(m.bin_edges.back() == 10.0);
  std::size_t total = 0;
  for (auto c : m.bin_count) total += c;
  CHECK(total == 11);
  CHECK(m.bin_count[0] == 3);  // 0, 1, 2
  CHECK(m.cumulative_fraction.back() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < m.cumulative_fraction.size(); ++i)
    CHECK(m.cumulative_fraction[i] >= m.cumulative_fraction[i - 1]);
}

TEST_CASE("zero loglik range yields a single bin and no slope") {
  const std::vector<ScoredPrediction> d{{"a", -1.0, 0.2}, {"b", -1.0, 0.4}, {"c", -1.0, 0.9}};
  const auto m = reliability_map(d, 10);
  CHECK(m.bin_count.size() == 1);
  CHECK_FALSE(m.fit.has_value());
  const auto j = nlohmann::json::parse(reliability_to_json(m, 1.0, std::nullopt, 0.95));
  CHECK(j["slope_defined"] == false);
  CHECK(j["fit"].is_null());
}

TEST_CASE("empty bins carry NaN means and are left out of the fit") {
  const std::vector<ScoredPrediction> d{{"a", 0.0, 1.0}, {"b", 0.1, 1.2}, {"c", 10.0, 21.0}};
  const auto m = reliability_map(d, 10);
  CHECK(std::isnan(m.bin_mean_loglik[5]));
  REQUIRE(m.fit.has_value());
  CHECK(m.fit->points == 2);
}

TEST_CASE("too little data") {
  CHECK_THROWS_AS(reliability_map({{"a", 0.0, 0.0}}), ValidationError);
  CHECK_THROWS_AS(reliability_map({{"a", 0.0, 0.0}, {"b", 1.0, 0.0}}, 0), ValidationError);
  CHECK_THROWS_AS(reliability_map({{"a", 0.0, 0.0}, {"b", NAN, 0.0}}), ValidationError);
}
