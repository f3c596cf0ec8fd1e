#include <doctest.h>

#include <vector>

#include "mhmm/errors.hpp"
#include "mhmm/policy.hpp"
#include "mhmm/rng.hpp"

using namespace mhmm;

namespace {

std::vector<int> seq(std::initializer_list<std::pair<int, int>> runs) {
  std::vector<int> s;
  for (const auto& [state, len] : runs) s.insert(s.end(), len, state);
  return s;
}

StatePath path_of(std::vector<int> states, const std::string& id = "b1") {
  return StatePath{id, std::move(states), 0.0};
}

std::vector<int> random_states(Rng& rng, int len) {
  std::vector<int> s(len);
  for (auto& v : s) v = rng.uniform() < 0.5 ? 1 : 2;
  return s;
}

}  // namespace

TEST_CASE("detect_default window completion") {
  const PolicyConfig cfg;  // window 12
  CHECK(detect_default(seq({{2, 12}, {1, 1}}), cfg) == 12);
  CHECK(!detect_default(seq({{2, 11}, {1, 1}, {2, 11}}), cfg).has_value());
  CHECK(!detect_default(seq({{1, 30}}), cfg).has_value());
  // first completion wins even with later longer runs
  CHECK(detect_default(seq({{1, 3}, {2, 12}, {1, 2}, {2, 20}}), cfg) == 15);

  CHECK_THROWS_AS(detect_default(std::vector<int>{}, cfg), ValidationError);
  CHECK_THROWS_AS(detect_default(std::vector<int>{1, 3}, cfg), ValidationError);
  CHECK_THROWS_AS(detect_default(seq({{2, 5}}), PolicyConfig{0}), ValidationError);
}

TEST_CASE("detect_default with window one is the first vulnerable week") {
  Rng rng(31);
  const PolicyConfig one{1};
  for (int rep = 0; rep < 200; ++rep) {
    const auto s = random_states(rng, 1 + static_cast<int>(rng.uniform_int(0, 30)));
    const auto got = detect_default(s, one);
    std::optional<int> expected;
    for (std::size_t t = 0; t < s.size(); ++t) {
      if (s[t] == 2) {
        expected = static_cast<int>(t) + 1;
        break;
      }
    }
    CHECK(got == expected);
  }
}

TEST_CASE("classify outcomes") {
  const PolicyConfig cfg;
  const auto recovered = classify(path_of(seq({{2, 12}, {1, 1}})), cfg);
  CHECK(recovered.classification == Classification::DefaultRecovered);
  CHECK(recovered.default_week == 12);

  const auto stuck = classify(path_of(seq({{2, 12}, {2, 5}})), cfg);
  CHECK(stuck.classification == Classification::DefaultNonRecovered);
  CHECK(stuck.default_week == 12);

  const auto healthy = classify(path_of(seq({{2, 11}, {1, 1}, {2, 11}})), cfg);
  CHECK(healthy.classification == Classification::NonDefault);
  CHECK(!healthy.default_week.has_value());
}

TEST_CASE("classification properties on random sequences") {
  Rng rng(32);
  const PolicyConfig cfg{4};
  for (int rep = 0; rep < 300; ++rep) {
    const auto s = random_states(rng, 1 + static_cast<int>(rng.uniform_int(0, 40)));
    const auto outcome = classify(path_of(s), cfg);
    const auto dw = detect_default(s, cfg);
    // default_week present iff classification is a default
    CHECK((outcome.classification != Classification::NonDefault) == dw.has_value());
    if (outcome.classification == Classification::DefaultRecovered) {
      REQUIRE(dw.has_value());
      bool saw_recovery = false;
      for (std::size_t t = static_cast<std::size_t>(*dw); t < s.size(); ++t) {
        saw_recovery |= (s[t] == 1);
      }
      CHECK(saw_recovery);
    }
    // monotonicity: growing the window never creates a default
    const auto wider = classify(path_of(s), PolicyConfig{cfg.window + 1});
    if (outcome.classification == Classification::NonDefault) {
      CHECK(wider.classification == Classification::NonDefault);
    }
  }
}

TEST_CASE("distress series hand traces") {
  const PolicyConfig cfg;
  SUBCASE("all healthy") {
    std::vector<StatePath> paths{path_of(seq({{1, 30}}), "a"), path_of(seq({{1, 25}}), "b")};
    for (const auto& pt : distress_series(paths, cfg)) CHECK(pt.proportion == 0.0);
  }
  SUBCASE("default at 12, recovery at 20, T = 25") {
    // weeks 1..12 state 2, 13..19 state 2, 20..25 state 1
    std::vector<StatePath> paths{path_of(seq({{2, 19}, {1, 6}}))};
    const auto series = distress_series(paths, cfg);
    REQUIRE(series.size() == 25);
    for (int w = 1; w <= 11; ++w) CHECK(series[w - 1].proportion == 0.0);
    for (int w = 12; w <= 19; ++w) CHECK(series[w - 1].proportion == 1.0);
    for (int w = 20; w <= 25; ++w) CHECK(series[w - 1].proportion == 0.0);
  }
  SUBCASE("one permanent default out of two") {
    std::vector<StatePath> paths{path_of(seq({{2, 30}}), "a"), path_of(seq({{1, 30}}), "b")};
    const auto series = distress_series(paths, cfg);
    for (int w = 1; w <= 11; ++w) CHECK(series[w - 1].proportion == 0.0);
    for (int w = 12; w <= 30; ++w) CHECK(series[w - 1].proportion == doctest::Approx(0.5));
  }
}

TEST_CASE("cohort flow counting and conservation") {
  const PolicyConfig cfg;
  std::vector<BorrowerOutcome> outcomes;
  for (int i = 0; i < 3; ++i) {
    outcomes.push_back({"n" + std::to_string(i), Classification::NonDefault, std::nullopt});
  }
  for (int i = 0; i < 2; ++i) {
    outcomes.push_back({"r" + std::to_string(i), Classification::DefaultRecovered, 12});
  }
  outcomes.push_back({"x", Classification::DefaultNonRecovered, 12});
  const CohortFlow flow = cohort_flow(outcomes);
  CHECK(flow.total == 6);
  CHECK(flow.non_default == 3);
  CHECK(flow.defaulted == 3);
  CHECK(flow.recovered == 2);
  CHECK(flow.non_recovered == 1);

  Rng rng(33);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<BorrowerOutcome> random_outcomes;
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 50));
    for (int i = 0; i < n; ++i) {
      const int c = static_cast<int>(rng.uniform_int(0, 2));
      BorrowerOutcome o;
      o.borrower_id = "b" + std::to_string(i);
      o.classification = static_cast<Classification>(c);
      if (o.classification != Classification::NonDefault) o.default_week = 12;
      random_outcomes.push_back(o);
    }
    const CohortFlow f = cohort_flow(random_outcomes);
    CHECK(f.non_default + f.recovered + f.non_recovered == f.total);
    CHECK(f.defaulted == f.recovered + f.non_recovered);
    CHECK(f.total == n);
  }
}

TEST_CASE("run_policy report aggregates") {
  const PolicyConfig cfg;
  std::vector<StatePath> paths{
      path_of(seq({{2, 12}, {1, 13}}), "a"),  // recovered at 13
      path_of(seq({{1, 25}}), "b"),
      path_of(seq({{2, 25}}), "c"),  // never recovers
  };
  const PolicyReport report = run_policy(paths, cfg);
  CHECK(report.flow.total == 3);
  CHECK(report.flow.recovered == 1);
  CHECK(report.flow.non_recovered == 1);
  CHECK(report.flow.non_default == 1);
  CHECK(report.terminal_distress == doctest::Approx(1.0 / 3.0));
  CHECK(report.series.size() == 25);
}
