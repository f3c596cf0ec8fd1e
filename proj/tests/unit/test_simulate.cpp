#include <doctest.h>

#include <cmath>
#include <vector>

#include "mhmm/errors.hpp"
#include "mhmm/simulate.hpp"

using namespace mhmm;

namespace {

SimulationConfig small_config(std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.n_borrowers = 12;
  cfg.weeks_min = 10;
  cfg.weeks_max = 15;
  cfg.seed = seed;
  cfg.covariates = {{"x1", 1.0, 2.0, false}, {"x2", -0.5, 1.0, false}};
  cfg.true_params.beta[0] = {-1.5, 0.2, -0.1};
  cfg.true_params.beta[1] = {0.2, -0.2, 0.3};
  cfg.true_params.sigma_u = {0.4};
  cfg.true_params.trans_logit_mean = {2.0, 1.5};
  cfg.true_params.sigma_v = 0.3;
  return cfg;
}

}  // namespace

TEST_CASE("simulation is deterministic under its seed") {
  const auto a = simulate_panel(small_config(9));
  const auto b = simulate_panel(small_config(9));
  CHECK(a.panel == b.panel);
  CHECK(a.truth.params == b.truth.params);
  REQUIRE(a.truth.paths.size() == b.truth.paths.size());
  for (std::size_t i = 0; i < a.truth.paths.size(); ++i) {
    CHECK(a.truth.paths[i].states == b.truth.paths[i].states);
  }
  const auto c = simulate_panel(small_config(10));
  CHECK(a.panel != c.panel);
}

TEST_CASE("frozen chain pinned to state one") {
  auto cfg = small_config(5);
  cfg.n_borrowers = 50;
  cfg.weeks_min = cfg.weeks_max = 100;
  cfg.true_params.trans_logit_mean = {40.0, 6.9};
  cfg.true_params.sigma_v = 1e-9;
  const auto sim = simulate_panel(cfg);
  for (const auto& path : sim.truth.paths) {
    for (int z : path.states) CHECK(z == 1);
  }
}

TEST_CASE("counts are non-negative and covariates standardized") {
  const auto sim = simulate_panel(small_config(21));
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& b : sim.panel.borrowers) {
    for (std::size_t t = 0; t < b.n_weeks(); ++t) {
      CHECK(b.counts[t] >= 0);
      sum += b.covariates(t, 1);
      sq += b.covariates(t, 1) * b.covariates(t, 1);
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  const double sd = std::sqrt((sq - sum * mean) / static_cast<double>(n - 1));
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(sd - 1.0) < 0.05);
}

TEST_CASE("transaction-calibrated moments reproduce at scale") {
  SimulationConfig cfg = default_transaction_config();
  cfg.n_borrowers = 1000;
  cfg.weeks_min = cfg.weeks_max = 50;  // 50,000 borrower-weeks
  cfg.seed = 77;
  const auto sim = simulate_panel(cfg);

  const auto& names = sim.panel.covariate_names;
  auto column_mean = [&](const std::string& name) {
    std::size_t col = 0;
    for (std::size_t c = 1; c < names.size(); ++c) {
      if (names[c] == name) col = c - 1;  // raw matrix has no intercept
    }
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& b : sim.panel.borrowers) {
      for (std::size_t t = 0; t < b.n_weeks(); ++t) {
        s += b.raw_covariates(t, col);
        ++n;
      }
    }
    return s / static_cast<double>(n);
  };

  CHECK(std::abs(column_mean("basic_expenses_amount") - 499.34) / 499.34 < 0.05);
  CHECK(std::abs(column_mean("discretionary_expenses_amount") - 988.93) / 988.93 < 0.05);
  CHECK(std::abs(column_mean("recurrent_income_amount") - 479.09) / 479.09 < 0.05);
  CHECK(std::abs(column_mean("luxury_expenses_n_transactions") - 1.19) / 1.19 < 0.05);

  // clamped columns never go negative
  for (const auto& b : sim.panel.borrowers) {
    for (std::size_t t = 0; t < b.n_weeks(); ++t) {
      for (std::size_t c = 0; c < b.raw_covariates.cols(); ++c) {
        CHECK(b.raw_covariates(t, c) >= 0.0);
      }
    }
  }
}

TEST_CASE("empirical transition frequencies match the realized matrix") {
  auto cfg = small_config(13);
  cfg.n_borrowers = 1;
  cfg.weeks_min = cfg.weeks_max = 10000;
  cfg.true_params.trans_logit_mean = {1.5, 0.5};
  const auto sim = simulate_panel(cfg);
  const TransitionMatrix P = transition_matrix(sim.truth.params, 0);

  const auto& z = sim.truth.paths[0].states;
  std::array<std::array<double, 2>, 2> counts{{{0, 0}, {0, 0}}};
  for (std::size_t t = 1; t < z.size(); ++t) counts[z[t - 1] - 1][z[t] - 1] += 1.0;
  for (int a = 0; a < 2; ++a) {
    const double row = counts[a][0] + counts[a][1];
    REQUIRE(row > 0);
    CHECK(std::abs(counts[a][a] / row - P(a, a)) < 0.02);
  }
}

TEST_CASE("equal betas remove the state effect on counts") {
  auto cfg = small_config(99);
  cfg.n_borrowers = 150;
  cfg.weeks_min = cfg.weeks_max = 40;
  cfg.true_params.beta[1] = cfg.true_params.beta[0];
  const auto sim = simulate_panel(cfg);

  double s1 = 0.0, s2 = 0.0, q1 = 0.0, q2 = 0.0;
  double n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < sim.panel.n_borrowers(); ++i) {
    const auto& b = sim.panel.borrowers[i];
    for (std::size_t t = 0; t < b.n_weeks(); ++t) {
      const double y = b.counts[t];
      if (sim.truth.paths[i].states[t] == 1) {
        s1 += y;
        q1 += y * y;
        ++n1;
      } else {
        s2 += y;
        q2 += y * y;
        ++n2;
      }
    }
  }
  const double m1 = s1 / n1, m2 = s2 / n2;
  const double v1 = q1 / n1 - m1 * m1, v2 = q2 / n2 - m2 * m2;
  const double se = std::sqrt(v1 / n1 + v2 / n2);
  CHECK(std::abs(m1 - m2) < 3.0 * se);
}

TEST_CASE("acceptance fixture regenerates identically and orders states by rate") {
  const auto a = acceptance_panel();
  const auto b = acceptance_panel();
  CHECK(a.panel == b.panel);

  double s1 = 0.0, s2 = 0.0, n1 = 0.0, n2 = 0.0;
  for (std::size_t i = 0; i < a.panel.n_borrowers(); ++i) {
    const auto& borrower = a.panel.borrowers[i];
    for (std::size_t t = 0; t < borrower.n_weeks(); ++t) {
      if (a.truth.paths[i].states[t] == 1) {
        s1 += borrower.counts[t];
        ++n1;
      } else {
        s2 += borrower.counts[t];
        ++n2;
      }
    }
  }
  CHECK(s2 / n2 > s1 / n1);

  // the fixture flips the sign of three covariate effects across states
  const auto& tp = a.truth.params;
  int flips = 0;
  for (std::size_t j = 1; j < tp.beta[0].size(); ++j) {
    flips += (tp.beta[0][j] * tp.beta[1][j] < 0.0);
  }
  CHECK(flips == 3);
}

TEST_CASE("truncate_weeks produces a valid shorter panel") {
  const auto sim = simulate_panel(small_config(55));
  const PanelDataset sub = truncate_weeks(sim.panel, 8);
  for (const auto& b : sub.borrowers) {
    CHECK(b.n_weeks() <= 8);
    CHECK(b.weeks.front() == 1);
  }
  CHECK_NOTHROW(validate_panel(sub));
  CHECK_THROWS_AS(truncate_weeks(sim.panel, 0), ValidationError);
}

TEST_CASE("invalid simulation configs are rejected") {
  auto cfg = small_config(1);
  cfg.n_borrowers = 0;
  CHECK_THROWS_AS(simulate_panel(cfg), ValidationError);

  cfg = small_config(1);
  cfg.weeks_min = 9;
  cfg.weeks_max = 5;
  CHECK_THROWS_AS(simulate_panel(cfg), ValidationError);

  cfg = small_config(1);
  cfg.true_params.beta[0] = {0.0};
  CHECK_THROWS_AS(simulate_panel(cfg), DimensionError);

  cfg = small_config(1);
  cfg.true_params.sigma_v = -1.0;
  CHECK_THROWS_AS(simulate_panel(cfg), DomainError);
}
