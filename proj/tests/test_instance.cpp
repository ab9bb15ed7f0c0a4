#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "json.hpp"
#include "ompn/errors.hpp"
#include "ompn/instance.hpp"
#include "ompn/rng.hpp"
#include "test_support.hpp"

using namespace ompn;

namespace {

LambdaVector median_n(std::size_t n) {
  return LambdaVector::make(LambdaPreset::median, n);
}

}  // namespace

TEST_SUITE("instance") {

TEST_CASE("random generator honors scenario, bounds, and determinism") {
  const Instance a = make_random_instance(10, 2, 1, 2, median_n(10), 7);
  a.validate();
  CHECK(a.n() == 10);
  CHECK(a.dim == 2);
  CHECK(a.p == 2);
  CHECK(a.distance_norm == NormSpec::euclidean());
  CHECK(a.ball_norm == NormSpec::euclidean());
  for (int j = 0; j < a.n(); ++j) {
    const double r = a.radii[static_cast<std::size_t>(j)];
    CHECK(r >= 0.0);
    CHECK(r <= 5.0);
    CHECK(a.setup_costs[static_cast<std::size_t>(j)] == r);
    for (double c : a.sites[static_cast<std::size_t>(j)]) {
      CHECK(c >= 0.0);
      CHECK(c <= 100.0);
    }
  }

  const Instance b = make_random_instance(10, 2, 1, 2, median_n(10), 7);
  CHECK(a == b);
  CHECK(instance_to_json(a) == instance_to_json(b));

  const Instance c = make_random_instance(10, 2, 1, 2, median_n(10), 8);
  CHECK_FALSE(a == c);

  const Instance tiny = make_random_instance(
      2, 2, 4, 1, LambdaVector::make(LambdaPreset::center, 2), 1);
  tiny.validate();
  CHECK(tiny.n() == 2);
}

TEST_CASE("scenario radius ranges") {
  CHECK(scenario_range(1).lo == 0.0);
  CHECK(scenario_range(1).hi == 5.0);
  CHECK(scenario_range(3).lo == 10.0);
  CHECK(scenario_range(3).hi == 15.0);
  CHECK(scenario_range(4).hi == 20.0);
  CHECK_THROWS_AS(scenario_range(0), ValidationError);
  CHECK_THROWS_AS(scenario_range(9), ValidationError);
}

TEST_CASE("scenario three radii stay inside their band over many draws") {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  int count = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const Instance inst = make_random_instance(
        1000, 2, 3, 5, median_n(1000), 1000 + static_cast<std::uint64_t>(rep));
    for (double r : inst.radii) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      ++count;
    }
  }
  CHECK(count == 10000);
  CHECK(lo >= 10.0);
  CHECK(hi <= 15.0);
}

TEST_CASE("bundled 49-state set") {
  const Instance us =
      builtin_us49(1, 5, LambdaVector::make(LambdaPreset::center, 49));
  us.validate();
  CHECK(us.n() == 49);
  CHECK(us.p == 5);

  // First site is Alabama; the smallest neighborhood belongs to DC.
  CHECK(us.sites[0][0] == doctest::Approx(33.7296).epsilon(1e-12));
  CHECK(us.sites[0][1] == doctest::Approx(32.7794).epsilon(1e-12));
  CHECK(us.radii[0] == doctest::Approx(2.078845).epsilon(1e-12));
  const double min_radius = *std::min_element(us.radii.begin(), us.radii.end());
  CHECK(min_radius == doctest::Approx(0.075061).epsilon(1e-12));

  // Larger scales multiply radii and setup costs alike.
  const Instance us3 = builtin_us49(3, 2, median_n(49));
  CHECK(us3.radii[0] == doctest::Approx(3.0 * 2.078845).epsilon(1e-12));
  for (int j = 0; j < 49; ++j) {
    CHECK(us3.setup_costs[static_cast<std::size_t>(j)] ==
          us3.radii[static_cast<std::size_t>(j)]);
    CHECK(us3.radii[static_cast<std::size_t>(j)] ==
          doctest::Approx(3.0 * us.radii[static_cast<std::size_t>(j)])
              .epsilon(1e-12));
  }
  CHECK_THROWS_AS(builtin_us49(7, 2, median_n(49)), ValidationError);
}

TEST_CASE("bundled five-point example") {
  const Instance ex = builtin_example5();
  ex.validate();
  CHECK(ex.n() == 5);
  CHECK(ex.p == 2);
  CHECK(ex.sites[0] == Point{2, 92});
  CHECK(ex.radii == std::vector<double>{2, 1, 0.05, 5, 1});
  CHECK(ex.radii[3] == 5.0);
  CHECK(ex.lambda.weights() == std::vector<double>{1, 1, 1, 1, 1});
  CHECK(ex.setup_costs == ex.radii);

  const Instance zero = builtin_example5(false);
  CHECK(zero.setup_costs == std::vector<double>{0, 0, 0, 0, 0});
  CHECK(zero.sites == ex.sites);
}

TEST_CASE("file round trip is exact") {
  const Instance us = builtin_us49(2, 3, median_n(49));
  const std::string path = testsup::scratch_file("roundtrip_us49.ompn.json");
  save_instance(us, path);
  const Instance back = load_instance(path);
  CHECK(back == us);
  CHECK(instance_to_json(back) == instance_to_json(us));
  CHECK(content_hash(back) == content_hash(us));
}

TEST_CASE("instance document uses the documented field set") {
  const Instance ex = builtin_example5();
  const nlohmann::json doc = nlohmann::json::parse(instance_to_json(ex));
  for (const char* key : {"dim", "points", "radii", "ball_norm",
                          "distance_norm", "setup_costs", "p", "lambda"}) {
    INFO(key);
    CHECK(doc.contains(key));
  }
  CHECK(doc["points"].size() == 5);
  CHECK(doc["ball_norm"] == "2");
  CHECK(doc["distance_norm"] == "2");

  // Explicit weight vectors survive the round trip as weights.
  Instance custom = ex;
  custom.lambda = LambdaVector::from_weights({5, 4, 3, 2, 1});
  const Instance back = instance_from_json(instance_to_json(custom));
  CHECK(back.lambda.weights() == std::vector<double>{5, 4, 3, 2, 1});
}

TEST_CASE("validation names the offending field") {
  Instance bad = builtin_example5();
  bad.p = 5;  // must be < n
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("p"), ValidationError);

  bad = builtin_example5();
  bad.radii[2] = -0.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  bad = builtin_example5();
  bad.sites[1] = {1.0};  // ragged coordinates
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  bad = builtin_example5();
  bad.setup_costs[0] = -1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  bad = builtin_example5();
  bad.lambda = LambdaVector::make(LambdaPreset::median, 4);  // wrong length
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("malformed files are rejected with diagnostics") {
  // A file whose p equals n must be rejected and the message must name p.
  const Instance ex = builtin_example5();
  nlohmann::json doc = nlohmann::json::parse(instance_to_json(ex));
  doc["p"] = 5;
  CHECK_THROWS_WITH_AS(instance_from_json(doc.dump()),
                       doctest::Contains("p"), ValidationError);

  doc = nlohmann::json::parse(instance_to_json(ex));
  doc["radii"][1] = "-3";
  CHECK_THROWS_AS(instance_from_json(doc.dump()), ValidationError);

  CHECK_THROWS_AS(instance_from_json("{not json"), ValidationError);
  CHECK_THROWS_AS(instance_from_json("{}"), ValidationError);
  CHECK_THROWS_AS(load_instance(testsup::scratch_file("missing_file.ompn.json")),
                  IoError);
}

TEST_CASE("content hash ignores the display name only") {
  Instance a = builtin_example5();
  Instance b = a;
  b.name = "renamed";
  CHECK(content_hash(a) == content_hash(b));
  b = a;
  b.radii[0] += 0.25;
  CHECK(content_hash(a) != content_hash(b));
}

TEST_CASE("shortest round-trip real formatting") {
  Rng rng(61);
  for (int trial = 0; trial < 10000; ++trial) {
    double v = rng.uniform(-1e6, 1e6);
    if (trial % 7 == 0) v = std::floor(v);  // exercise integral values
    if (trial % 11 == 0) v = v / 1e9;       // and small magnitudes
    const double back = parse_real(format_real(v));
    REQUIRE(back == v);
  }
  CHECK(parse_real(format_real(0.0)) == 0.0);
  CHECK(parse_real(format_real(0.1)) == 0.1);
}

}  // TEST_SUITE
