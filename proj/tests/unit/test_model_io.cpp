#include <doctest.h>

#include <functional>
#include <sstream>

#include "fixtures.hpp"
#include "xconsist/errors.hpp"
#include "xconsist/io.hpp"
#include "xconsist/model.hpp"

using namespace xconsist;

namespace {

std::vector<std::string> diagnostics_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.diagnostics();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("fixture bundle parses into three samples and six records") {
  const auto b = parse_bundle({fixture("bundle/samples.jsonl")}, {fixture("bundle/records.jsonl")},
                              "captioning");
  CHECK(b.samples.size() == 3);
  CHECK(b.records.size() == 6);
  REQUIRE(b.anchor() != nullptr);
  CHECK(b.anchor()->name == "captioning");
  const auto* loc = b.find_task("localization");
  REQUIRE(loc != nullptr);
  CHECK(loc->mode == PerturbationMode::ContrastInput);
  CHECK_FALSE(loc->is_anchor);
  CHECK(b.samples.at("s1").concept_text() == "dog");
}

TEST_CASE("samples and records survive a write/read round trip") {
  std::ifstream sin(fixture("bundle/samples.jsonl"));
  std::ifstream rin(fixture("bundle/records.jsonl"));
  const auto samples = read_samples(sin);
  const auto records = read_records(rin);

  std::ostringstream so, ro;
  write_samples(so, samples);
  write_records(ro, records);
  std::istringstream si(so.str()), ri(ro.str());
  CHECK(read_samples(si) == samples);
  CHECK(read_records(ri) == records);

  // Serialization is a fixed point after one pass.
  std::ostringstream so2;
  std::istringstream si2(so.str());
  write_samples(so2, read_samples(si2));
  CHECK(so2.str() == so.str());
}

TEST_CASE("record referencing an unknown contrast id is rejected") {
  std::ifstream sin(fixture("bundle/samples.jsonl"));
  auto samples = read_samples(sin);
  LikelihoodRecord r{"s2", "captioning", PerturbationMode::ContrastOutput, -1.0, {{"c9", -2.0}}};
  const auto d = diagnostics_of([&] { make_bundle(samples, {r}, "captioning"); });
  CHECK(any_contains(d, "c9"));
}

TEST_CASE("parser reports every bad line with its line number") {
  std::istringstream in(
      "{\"sample_id\":\"a\",\"task\":\"t\",\"mode\":\"contrast_output\",\"gold_loglik\":0,"
      "\"contrasts\":[]}\n"
      "not json\n"
      "{\"sample_id\":\"b\",\"task\":\"t\",\"mode\":\"sideways\",\"gold_loglik\":0,"
      "\"contrasts\":[]}\n"
      "{\"sample_id\":\"c\",\"task\":\"t\",\"mode\":\"contrast_output\",\"gold_loglik\":0,"
      "\"contrasts\":[],\"extra\":1}\n");
  const auto d = diagnostics_of([&] { read_records(in, "recs"); });
  REQUIRE(d.size() == 3);
  CHECK(any_contains(d, "recs:2:"));
  CHECK(any_contains(d, "recs:3:"));
  CHECK(any_contains(d, "recs:4:"));
  CHECK(any_contains(d, "extra"));
}

TEST_CASE("metadata is the only tolerated extra key") {
  std::istringstream in(
      "{\"sample_id\":\"a\",\"task\":\"t\",\"mode\":\"contrast_output\",\"gold_loglik\":-1,"
      "\"contrasts\":[{\"contrast_id\":\"c1\",\"loglik\":-2}],\"metadata\":{\"model\":\"m\"}}\n");
  const auto r = read_records(in);
  REQUIRE(r.size() == 1);
  CHECK(r[0].contrasts.at(0).loglik == -2.0);
}

TEST_CASE("anchor must name a task with records") {
  const auto d = diagnostics_of([&] {
    parse_bundle({fixture("bundle/samples.jsonl")}, {fixture("bundle/records.jsonl")}, "vqa");
  });
  CHECK(any_contains(d, "vqa"));
}

TEST_CASE("dataset statistics") {
  std::ifstream sin(fixture("bundle/samples.jsonl"));
  const auto s = dataset_stats(read_samples(sin));
  CHECK(s.samples == 3);
  CHECK(s.contrast_sets == 7);
  CHECK(s.mean_contrasts_per_sample == doctest::Approx(7.0 / 3.0));
  CHECK(s.with_vqa == 1);
  CHECK(s.with_localization == 3);
  CHECK(s.with_generation == 1);
  CHECK(s.per_category.at(Category::Food).samples == 1);
  CHECK(s.per_category.at(Category::Food).contrasts == 2);

  ContrastSample a{"a", "i", "a b", {0, 1}, Category::Misc, {}, {}, {}, {{"c1", "x"}}};
  ContrastSample b{"b", "i", "a b", {0, 1}, Category::Misc, {}, {}, {}, {{"c1", "x"}, {"c2", "y"}, {"c3", "z"}}};
  CHECK(dataset_stats(std::vector<ContrastSample>{a, b}).mean_contrasts_per_sample == 2.0);

  const auto empty = dataset_stats(std::vector<ContrastSample>{});
  CHECK(empty.samples == 0);
  CHECK(empty.contrast_sets == 0);
  CHECK(empty.mean_contrasts_per_sample == 0.0);
}

TEST_CASE("sample invariants") {
  ContrastSample s{"s", "i", "a dog", {2, 9}, Category::Animal, {}, {}, {}, {{"c1", "cat"}}};
  CHECK_FALSE(check_sample(s).empty());  // span past the caption
  s.concept_span = {2, 5};
  CHECK(check_sample(s).empty());
  s.contrasts.push_back({"c1", "cow"});
  CHECK_FALSE(check_sample(s).empty());  // duplicate contrast id
}
