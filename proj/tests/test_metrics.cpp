#include <doctest.h>

#include <cmath>

#include "poisonguard/errors.hpp"
#include "poisonguard/metrics.hpp"
#include "poisonguard/rng.hpp"

using namespace pg;

TEST_CASE("detection accuracy") {
  CHECK(detection_accuracy({30, 0, 0, 0}) == 1.0);
  CHECK(detection_accuracy({27, 0, 0, 3}) == doctest::Approx(0.9));
  CHECK(detection_accuracy({0, 5, 0, 0}) == 1.0);  // clean-only run
  CHECK_THROWS_AS(detection_accuracy({0, 0, 0, 0}), EmptyRun);
}

TEST_CASE("sanitization quality family") {
  ConfusionCounts c{30, 0, 0, 0};
  SanitizationCounts s{29, 0};
  CHECK(*sq_tp(c, s) == doctest::Approx(29.0 / 30.0));
  CHECK_FALSE(sq_fp(c, s).has_value());  // FP = 0: absent, never coerced to 0

  c = {10, 0, 2, 0};
  s = {10, 2};
  CHECK(*sq_overall(c, s) == 1.0);

  c = {8, 0, 2, 0};
  s = {2, 1};
  CHECK(*sq_overall(c, s) == doctest::Approx(0.3));

  CHECK_FALSE(sq_tp({0, 1, 1, 1}, {0, 0}).has_value());
  CHECK_FALSE(sq_overall({0, 1, 0, 1}, {0, 0}).has_value());
}

TEST_CASE("remaining poisoned count") {
  CHECK(remaining_poisoned({10, 0, 3, 0}, {10, 3}) == 0);
  CHECK(remaining_poisoned({9, 0, 0, 1}, {9, 0}) == 1);
  CHECK(remaining_poisoned({8, 0, 4, 2}, {5, 3}) == 6);  // 2 + 3 + 1
  CHECK_THROWS_AS(remaining_poisoned({1, 0, 0, 0}, {2, 0}), InconsistentLedger);
}

TEST_CASE("probability a sample stays poisoned, both printed and restricted") {
  SUBCASE("perfect run") {
    auto p = prob_remains_poisoned({10, 0, 0, 0}, {10, 0});
    REQUIRE(p);
    CHECK(p->as_printed == 0.0);
    CHECK(p->truth_restricted == 0.0);
  }
  SUBCASE("one miss in ten") {
    auto p = prob_remains_poisoned({9, 0, 0, 1}, {9, 0});
    REQUIRE(p);
    CHECK(p->as_printed == doctest::Approx(0.1));
    CHECK(p->truth_restricted == doctest::Approx(0.1));
  }
  SUBCASE("altered false positives separate the two variants") {
    auto p = prob_remains_poisoned({10, 0, 2, 0}, {10, 1});
    REQUIRE(p);
    CHECK(p->as_printed == doctest::Approx(0.1));
    CHECK(p->truth_restricted == 0.0);
  }
  SUBCASE("no poison in the run") {
    CHECK_FALSE(prob_remains_poisoned({0, 5, 2, 0}, {0, 1}).has_value());
  }
}

TEST_CASE("communication cost sums exact character counts") {
  SUBCASE("single exchange") {
    CommCost c = comm_cost({{3, 2, 0.0}}, 100);
    CHECK(c.total_chars == 5);
    CHECK(c.exchanges == 1);
    CHECK(c.total_samples == 100);
  }
  SUBCASE("homogeneous exchanges scale linearly") {
    std::vector<CostEntry> entries(7, {120, 80, 1.0});
    CommCost c = comm_cost(entries, 50);
    CHECK(c.total_chars == 7 * 200);
    CHECK(c.total_prompt_chars == 7 * 120);
    CHECK(c.total_response_chars == 7 * 80);
  }
}

TEST_CASE("latency statistics") {
  CHECK_FALSE(latency_stats({}).has_value());
  auto s = latency_stats({{0, 0, 1.0}, {0, 0, 1.0}, {0, 0, 1.0}});
  REQUIRE(s);
  CHECK(s->mean == 1.0);
  CHECK(s->max == 1.0);
  auto t = latency_stats({{0, 0, 0.5}, {0, 0, 1.5}});
  REQUIRE(t);
  CHECK(t->mean == doctest::Approx(1.0));
  CHECK(t->median == doctest::Approx(1.0));
  CHECK(t->total == doctest::Approx(2.0));
}

TEST_CASE("privacy leak closed form") {
  CHECK(privacy_leak({0.0, 1000}) == 0.0);
  CHECK(privacy_leak({0.7, 0}) == 0.0);
  CHECK(privacy_leak({1.0, 1}) == 1.0);
  // Cross-checked by repeated multiplication.
  double survive = 1.0;
  for (int i = 0; i < 100; ++i) survive *= 0.99;
  CHECK (privacy_leak({0.01, 100}) == doctest::Approx(1.0 - survive).epsilon(1e-12));
  CHECK(privacy_leak({0.01, 100}) == doctest::Approx(0.6340).epsilon(1e-4));
}

TEST_CASE("metric identities over random count tuples") {
  rng::Stream stream(123);
  for (int trial = 0; trial < 2000; ++trial) {
    ConfusionCounts c{stream.bounded(50), stream.bounded(50), stream.bounded(50),
                      stream.bounded(50)};
    SanitizationCounts s{c.tp ? stream.bounded(c.tp + 1) : 0,
                         c.fp ? stream.bounded(c.fp + 1) : 0};
    if (c.scored() > 0) {
      double acc = detection_accuracy(c);
      CHECK(acc >= 0.0);
      CHECK(acc <= 1.0);
    }
    CHECK(remaining_poisoned(c, s) == c.fn + (c.tp - s.cs_tp) + (c.fp - s.cs_fp));
    auto lo = sq_tp(c, s), hi = sq_fp(c, s), mid = sq_overall(c, s);
    if (lo && hi) {
      REQUIRE(mid);
      CHECK(*mid >= std::min(*lo, *hi) - 1e-12);
      CHECK(*mid <= std::max(*lo, *hi) + 1e-12);
    }
    double p = stream.uniform();
    std::size_t m = stream.bounded(200);
    CHECK(privacy_leak({p, m + 1}) >= privacy_leak({p, m}) - 1e-12);
  }
}

TEST_CASE("report assembly and round trip") {
  std::vector<CostEntry> cost = {{100, 50, 0.2}, {110, 60, 0.4}};
  MetricsReport r = assemble_report("run1", "mock", "MotionSense", "one", {2, 0, 0, 0},
                                    {2, 0}, 0, cost, 100, PrivacyParams{0.01, 0});
  CHECK(r.accuracy == 1.0);
  CHECK(*r.sq_tp_value == 1.0);
  CHECK(r.remaining == 0);
  CHECK(r.comm.total_chars == 320);
  REQUIRE(r.privacy);
  CHECK(r.privacy->m == 2);
  CHECK(*r.privacy_leak_value == doctest::Approx(1.0 - 0.99 * 0.99));

  MetricsReport back = MetricsReport::from_json(r.to_json());
  CHECK(back.to_json() == r.to_json());

  CHECK_THROWS_AS(assemble_report("x", "b", "d", "s", {1, 0, 0, 0}, {2, 0}, 0, {}, 100,
                                  std::nullopt),
                  InconsistentLedger);
}

TEST_CASE("markdown comparison table shape") {
  MetricsReport r = assemble_report("run1", "mock", "HHAR", "few", {1, 0, 0, 0}, {1, 0},
                                    0, {{100, 1754, 13.0}}, 100, std::nullopt);
  std::string md = render_comparison_markdown({r});
  CHECK(md.find("| mock-few | HHAR | 1.00 | 1.00 | 1754 | 13.00 |") != std::string::npos);
}
