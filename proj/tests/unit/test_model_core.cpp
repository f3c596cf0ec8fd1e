#include <doctest.h>

#include <cmath>
#include <vector>

#include "mhmm/errors.hpp"
#include "mhmm/math.hpp"
#include "mhmm/model.hpp"
#include "mhmm/rng.hpp"
#include "support/oracles.hpp"

using namespace mhmm;

TEST_CASE("emission_rate basics") {
  const std::vector<double> zero2{0.0, 0.0};
  const std::vector<double> beta{0.2, -0.4};
  const std::vector<double> d{1.0};

  CHECK(emission_rate(zero2, beta, d, std::vector<double>{0.0}) == doctest::Approx(1.0));

  // x = [1, 0.5], beta = [0.2, -0.4], u = 0.3 -> exp(0.2 - 0.2 + 0.3)
  const std::vector<double> x{1.0, 0.5};
  const double expected = std::exp(0.2 - 0.4 * 0.5 + 0.3);
  CHECK(emission_rate(x, beta, d, std::vector<double>{0.3}) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(1.34986).epsilon(1e-5));

  // doubling u multiplies the rate by exp(0.3)
  const double r1 = emission_rate(x, beta, d, std::vector<double>{0.3});
  const double r2 = emission_rate(x, beta, d, std::vector<double>{0.6});
  CHECK(r2 / r1 == doctest::Approx(std::exp(0.3)).epsilon(1e-12));

  CHECK_THROWS_AS(emission_rate(x, std::vector<double>{0.1}, d, std::vector<double>{0.0}),
                  DimensionError);
  CHECK_THROWS_AS(emission_rate(x, beta, d, std::vector<double>{0.0, 0.0}), DimensionError);
}

TEST_CASE("emission_rate is log-linear in each coefficient") {
  Rng rng(11);
  const std::size_t p = 4;
  std::vector<double> x(p), beta(p);
  for (std::size_t j = 0; j < p; ++j) {
    x[j] = rng.normal();
    beta[j] = 0.3 * rng.normal();
  }
  const std::vector<double> d{1.0}, u{0.2};
  const double h = 1e-6;
  for (std::size_t j = 0; j < p; ++j) {
    auto hi = beta, lo = beta;
    hi[j] += h;
    lo[j] -= h;
    const double slope =
        (std::log(emission_rate(x, hi, d, u)) - std::log(emission_rate(x, lo, d, u))) /
        (2.0 * h);
    CHECK(slope == doctest::Approx(x[j]).epsilon(1e-8));
  }
}

TEST_CASE("emission_log_pmf values and stability") {
  CHECK(emission_log_pmf(0, 1.0) == doctest::Approx(-1.0).epsilon(1e-14));

  const double expected = 3.0 * std::log(2.0) - 2.0 - std::log(6.0);
  CHECK(emission_log_pmf(3, 2.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(-1.71231).epsilon(1e-5));

  // large count: finite, matches the summed-log formulation
  const double big = emission_log_pmf(150, 150.0);
  CHECK(std::isfinite(big));
  double summed = -150.0;
  for (int k = 1; k <= 150; ++k) summed += std::log(150.0) - std::log(double(k));
  CHECK(big == doctest::Approx(summed).epsilon(1e-9));

  CHECK_THROWS_AS(emission_log_pmf(1, 0.0), DomainError);
  CHECK_THROWS_AS(emission_log_pmf(1, -2.0), DomainError);
  CHECK_THROWS_AS(emission_log_pmf(-1, 1.0), DomainError);
}

TEST_CASE("emission_log_pmf exponentiates to a pmf") {
  for (double lambda : {0.1, 1.0, 7.0, 150.0}) {
    const long y_max =
        static_cast<long>(lambda + 20.0 * std::sqrt(lambda) + 50.0);
    double mass = 0.0;
    for (long y = 0; y <= y_max; ++y) mass += std::exp(emission_log_pmf(y, lambda));
    CHECK(mass >= 1.0 - 1e-8);
    CHECK(mass <= 1.0 + 1e-12);
  }
}

TEST_CASE("transition_matrix parameterization") {
  auto params = test::make_params({0.0}, {0.0}, 0.0, 0.0, 0.0);
  const TransitionMatrix P0 = transition_matrix(params, 0);
  CHECK(P0(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(P0(1, 1) == doctest::Approx(0.5).epsilon(1e-14));

  params.trans_logit_mean = {2.1972, 2.1972};
  const TransitionMatrix P = transition_matrix(params, 0);
  CHECK(P(0, 0) == doctest::Approx(0.9).epsilon(1e-4));
  CHECK(P(0, 0) == doctest::Approx(logistic(2.1972)).epsilon(1e-15));

  CHECK_THROWS_AS(transition_matrix(params, 5), DimensionError);
}

TEST_CASE("transition rows sum to one exactly") {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    auto params = test::make_params({0.0}, {0.0}, 0.0, 6.0 * (rng.uniform() - 0.5),
                                    6.0 * (rng.uniform() - 0.5), rng.normal(), rng.normal());
    const TransitionMatrix P = transition_matrix(params, 0);
    CHECK(P(0, 0) + P(0, 1) == 1.0);
    CHECK(P(1, 0) + P(1, 1) == 1.0);
    CHECK(P(0, 0) > 0.0);
    CHECK(P(0, 0) < 1.0);
    CHECK(P(1, 1) > 0.0);
    CHECK(P(1, 1) < 1.0);
  }
}

TEST_CASE("initial_distribution is the stationary distribution") {
  const auto sym = TransitionMatrix::from_diagonals(0.5, 0.5);
  const auto pi_sym = initial_distribution(sym);
  CHECK(pi_sym[0] == doctest::Approx(0.5).epsilon(1e-15));

  const auto P = TransitionMatrix::from_diagonals(0.9, 0.8);
  const auto pi = initial_distribution(P);
  CHECK(pi[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(pi[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(pi[0] + pi[1] == doctest::Approx(1.0).epsilon(1e-15));

  Rng rng(23);
  for (int rep = 0; rep < 200; ++rep) {
    const auto Q = TransitionMatrix::from_diagonals(logistic(4.0 * rng.normal()),
                                                    logistic(4.0 * rng.normal()));
    const auto s = initial_distribution(Q);
    CHECK(std::abs(s[0] * Q(0, 0) + s[1] * Q(1, 0) - s[0]) < 1e-12);
    CHECK(std::abs(s[0] * Q(0, 1) + s[1] * Q(1, 1) - s[1]) < 1e-12);
  }

  CHECK_THROWS_AS(initial_distribution(TransitionMatrix{{{{1.0, 0.0}, {0.0, 1.0}}}}),
                  DomainError);
}

TEST_CASE("panel validation catches broken invariants") {
  auto series = test::make_intercept_series({1, 0, 2});
  PanelDataset panel;
  panel.borrowers = {series};
  panel.covariate_names = {"intercept"};
  panel.standardization = {Standardization{}};
  CHECK_NOTHROW(validate_panel(panel));

  auto dup = panel;
  dup.borrowers.push_back(series);
  CHECK_THROWS_AS(validate_panel(dup), ValidationError);

  auto gap = panel;
  gap.borrowers[0].weeks = {1, 3, 4};
  CHECK_THROWS_AS(validate_panel(gap), ValidationError);

  auto neg = panel;
  neg.borrowers[0].counts[1] = -1;
  CHECK_THROWS_AS(validate_panel(neg), ValidationError);

  auto badstd = panel;
  badstd.standardization.clear();
  CHECK_THROWS_AS(validate_panel(badstd), DimensionError);
}
