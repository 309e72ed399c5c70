#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "xconsist/errors.hpp"
#include "xconsist/io.hpp"
#include "xconsist/metrics.hpp"

using namespace xconsist;

namespace {

EvaluationBundle fixture_bundle() {
  return parse_bundle({fixture("bundle/samples.jsonl")}, {fixture("bundle/records.jsonl")},
                      "captioning");
}

}  // namespace

TEST_CASE("fixture bundle: hand-computed C_k and preference accuracy") {
  const auto r = build_report(fixture_bundle(), "captioning", "localization", 3);
  CHECK(r.n_samples_at_k.at(1) == 3);
  CHECK(r.consistency_at_k.at(1) == doctest::Approx(2.0 / 3.0));
  CHECK(r.preference_accuracy_at_k.at(1) == 0.0);
  CHECK(r.anchor_preference_accuracy_at_k.at(1) == doctest::Approx(1.0 / 3.0));
  CHECK(r.ties_at_k.at(1) == 0);

  CHECK(r.n_samples_at_k.at(2) == 3);
  CHECK(r.consistency_at_k.at(2) == doctest::Approx(2.0 / 3.0));
  CHECK(r.preference_accuracy_at_k.at(2) == 1.0);
  CHECK(r.anchor_preference_accuracy_at_k.at(2) == doctest::Approx(2.0 / 3.0));
  CHECK(r.ties_at_k.at(2) == 1);

  CHECK(r.n_samples_at_k.at(3) == 1);
  CHECK(r.consistency_at_k.at(3) == 1.0);

  REQUIRE(r.rho_rank.has_value());
  CHECK(*r.rho_rank == 1.0);
  CHECK(r.skipped == 0);
}

TEST_CASE("k beyond every sample's contrast count has no value") {
  const auto b = fixture_bundle();
  const auto r = consistency_at_k(b, "captioning", "localization", 4);
  CHECK(r.n == 0);
  CHECK_FALSE(r.value.has_value());
  const auto rep = build_report(b, "captioning", "localization", 4);
  CHECK(rep.consistency_at_k.count(4) == 0);
  CHECK(report_to_ck_csv(rep).find("4,0,,") != std::string::npos);
}

TEST_CASE("difficulty order breaks loglik ties by contrast id") {
  LikelihoodRecord r{"s", "a", PerturbationMode::ContrastOutput, 0.0,
                     {{"c3", -1.0}, {"c1", -1.0}, {"c2", -0.5}, {"c0", -3.0}}};
  CHECK(rank_contrasts_by_difficulty(r) == std::vector<std::string>{"c2", "c1", "c3", "c0"});
  r.contrasts.clear();
  CHECK_THROWS_AS(rank_contrasts_by_difficulty(r), ValidationError);
}

TEST_CASE("a tie with the contrast prefers neither side") {
  LikelihoodRecord a{"s", "a", PerturbationMode::ContrastOutput, -1.0, {{"c1", -1.0}}};
  LikelihoodRecord e{"s", "e", PerturbationMode::ContrastInput, -2.0, {{"c1", -1.0}}};
  const auto j = judge_pair(a, e, "c1");
  CHECK(j.anchor_tie);
  CHECK_FALSE(j.anchor_prefers_gold);
  CHECK_FALSE(j.eval_prefers_gold);
  // A tie falls outside both agreeing cases, so the pair is not consistent.
  CHECK_FALSE(j.consistent);
  e.gold_loglik = -1.0;
  const auto both = judge_pair(a, e, "c1");
  CHECK(both.eval_tie);
  CHECK_FALSE(both.consistent);
}

TEST_CASE("C_k agrees with enumeration on random bundles") {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto b = oracle::random_bundle(seed);
    for (int k = 1; k <= 6; ++k) {
      const auto o = oracle::enumerate_ck(b, "anchor", "eval", k);
      const auto c = consistency_at_k(b, "anchor", "eval", k);
      const auto p = preference_accuracy_at_k(b, "anchor", "eval", k);
      REQUIRE(c.n == o.n);
      CHECK(c.hits == o.consistent);
      CHECK(p.hits == o.eval_hits);
      if (o.n > 0) {
        CHECK(*c.value == static_cast<double>(o.consistent) / static_cast<double>(o.n));
      }
    }
  }
}

TEST_CASE("C_k is invariant under strictly increasing transforms of likelihoods") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    auto b = oracle::random_bundle(seed);
    auto t = b;
    for (auto& [key, rec] : t.records) {
      auto f = [](double x) { return 3.0 * x + 7.0; };
      rec.gold_loglik = f(rec.gold_loglik);
      for (auto& c : rec.contrasts) c.loglik = f(c.loglik);
    }
    for (int k = 1; k <= 3; ++k) {
      const auto x = consistency_at_k(b, "anchor", "eval", k);
      const auto y = consistency_at_k(t, "anchor", "eval", k);
      CHECK(x.n == y.n);
      CHECK(x.hits == y.hits);
    }
  }
}

TEST_CASE("swapping gold and every contrast on both tasks preserves consistency") {
  // Negating all scores flips every strict preference on both sides; agreement
  // is unchanged unless ties are involved, and the coarse grid is avoided here.
  LikelihoodRecord a{"s", "a", PerturbationMode::ContrastOutput, -1.1, {{"c1", -0.7}, {"c2", -2.3}}};
  LikelihoodRecord e{"s", "e", PerturbationMode::ContrastInput, -0.4, {{"c1", -0.9}, {"c2", -0.2}}};
  for (const char* id : {"c1", "c2"}) {
    auto a2 = a, e2 = e;
    for (auto* r : {&a2, &e2}) {
      r->gold_loglik = -r->gold_loglik;
      for (auto& c : r->contrasts) c.loglik = -c.loglik;
    }
    CHECK(judge_pair(a, e, id).consistent == judge_pair(a2, e2, id).consistent);
  }
}

TEST_CASE("disjoint non-empty contrast sets are an error; empty lists are skipped") {
  std::vector<ContrastSample> samples{
      {"s", "i", "a dog", {2, 5}, Category::Animal, {}, {}, {}, {{"c1", "cat"}, {"c2", "cow"}}}};
  LikelihoodRecord a{"s", "a", PerturbationMode::ContrastOutput, -1.0, {{"c1", -2.0}}};
  LikelihoodRecord e{"s", "e", PerturbationMode::ContrastInput, -1.0, {{"c2", -2.0}}};
  const auto b = make_bundle(samples, {a, e}, "a");
  CHECK_THROWS_AS(check_pair(b, "a", "e"), ValidationError);
  CHECK_THROWS_AS(build_report(b, "a", "e", 1), ValidationError);

  e.contrasts.clear();
  const auto b2 = make_bundle(samples, {a, e}, "a");
  const auto elig = check_pair(b2, "a", "e");
  CHECK(elig.empty == 1);
  CHECK(consistency_at_k(b2, "a", "e", 1).n == 0);
}

TEST_CASE("spearman on descending average ranks") {
  const std::vector<double> a{3, 1, 2}, b{30, 10, 20}, c{1, 3, 2};
  CHECK(*spearman(a, b) == 1.0);
  CHECK(*spearman(a, c) == -1.0);
  const std::vector<double> flat{1, 1, 1};
  CHECK_FALSE(spearman(a, flat).has_value());
  CHECK(descending_average_ranks(std::vector<double>{5, 7, 5, 1}) ==
        std::vector<double>{2.5, 1.0, 2.5, 4.0});
}

TEST_CASE("rho_rank counts degenerate samples and supports pooling") {
  const auto b = fixture_bundle();
  const auto per = rho_rank(b, "captioning", "localization");
  CHECK(per.value == 1.0);
  CHECK(per.n == 3);
  CHECK(per.degenerate == 0);
  const auto pooled = rho_rank(b, "captioning", "localization", RhoAggregation::Pooled);
  CHECK(pooled.value >= -1.0);
  CHECK(pooled.value <= 1.0);

  std::vector<ContrastSample> samples{
      {"s", "i", "a dog", {2, 5}, Category::Animal, {}, {}, {}, {{"c1", "cat"}, {"c2", "cow"}}}};
  LikelihoodRecord a{"s", "a", PerturbationMode::ContrastOutput, -1.0, {{"c1", -2.0}, {"c2", -2.0}}};
  LikelihoodRecord e{"s", "e", PerturbationMode::ContrastInput, -1.0, {{"c1", -2.0}, {"c2", -3.0}}};
  CHECK_THROWS_AS(rho_rank(make_bundle(samples, {a, e}, "a"), "a", "e"), ValidationError);
}

TEST_CASE("report serializations") {
  const auto r = build_report(fixture_bundle(), "captioning", "localization", 2);
  const auto json = report_to_json(r);
  CHECK(json.find("\"anchor\"") != std::string::npos);
  const auto csv = report_to_ck_csv(r);
  CHECK(csv.rfind("k,n,consistency,preference_accuracy\n", 0) == 0);
  CHECK(report_to_scatter_csv(r).rfind("k,anchor_accuracy,eval_accuracy,consistency\n", 0) == 0);
}
