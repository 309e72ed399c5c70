#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "xconsist/errors.hpp"
#include "xconsist/parallel.hpp"
#include "xconsist/text.hpp"

using namespace xconsist;

TEST_CASE("format_real round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5, 1e-300, 123456789.0, 0.0}) {
    CHECK(std::stod(format_real(v)) == v);
  }
  CHECK(format_real(0.5) == "0.5");
}

TEST_CASE("strict number parsing") {
  CHECK(parse_real("1e-3", "x") == 0.001);
  CHECK(parse_real("-2.5", "x") == -2.5);
  CHECK_THROWS_AS(parse_real("1.5abc", "x"), ValidationError);
  CHECK_THROWS_AS(parse_real("", "x"), ValidationError);
  CHECK(parse_integer("42", "n") == 42);
  CHECK_THROWS_AS(parse_integer("4.2", "n"), ValidationError);
}

TEST_CASE("CSV quoting") {
  CHECK(split_csv_line("a,\"b,c\",\"d \"\"e\"\"\"") == std::vector<std::string>{"a", "b,c", "d \"e\""});
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(split_csv_line(csv_escape("x \"y\", z")) == std::vector<std::string>{"x \"y\", z"});
}

TEST_CASE("CSV header and line diagnostics") {
  std::istringstream ok("a,b\n1,2\n\n3,4\n");
  const auto t = read_csv(ok, "t.csv", {"a", "b"});
  CHECK(t.rows.size() == 2);
  CHECK(t.line_numbers.back() == 4);
  std::istringstream wrong("a,c\n1,2\n");
  CHECK_THROWS_AS(read_csv(wrong, "t.csv", {"a", "b"}), ValidationError);
  std::istringstream ragged("a,b\n1\n2,3,4\n");
  try {
    read_csv(ragged, "r.csv", {"a", "b"});
    FAIL("expected error");
  } catch (const ValidationError& e) {
    CHECK(e.diagnostics().size() == 2);
  }
}

TEST_CASE("parallel_chunks covers the range exactly once") {
  for (unsigned workers : {1u, 3u, 8u}) {
    std::vector<std::atomic<int>> hits(1001);
    parallel_chunks(
        hits.size(),
        [&](std::size_t, std::size_t b, std::size_t e) {
          for (std::size_t i = b; i < e; ++i) ++hits[i];
        },
        workers);
    for (auto& h : hits) CHECK(h == 1);
  }
  // An empty range still yields one (empty) chunk so reductions have a slot.
  parallel_chunks(0, [](std::size_t c, std::size_t b, std::size_t e) {
    CHECK(c == 0);
    CHECK(b == e);
  }, 4);
  CHECK(worker_count() >= 1);
}
