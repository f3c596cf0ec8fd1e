#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mhmm/errors.hpp"
#include "mhmm/likelihood.hpp"
#include "mhmm/math.hpp"
#include "mhmm/rng.hpp"
#include "support/oracles.hpp"

using namespace mhmm;

namespace {

ModelParameters label_swapped(const ModelParameters& p) {
  ModelParameters s = p;
  std::swap(s.beta[0], s.beta[1]);
  std::swap(s.trans_logit_mean[0], s.trans_logit_mean[1]);
  for (auto& v : s.trans_logit_dev) std::swap(v[0], v[1]);
  return s;
}

PanelDataset single_borrower_panel(const BorrowerSeries& series) {
  PanelDataset panel;
  panel.borrowers = {series};
  panel.covariate_names.assign(series.covariates.cols(), "");
  panel.covariate_names[0] = "intercept";
  for (std::size_t c = 1; c < series.covariates.cols(); ++c) {
    panel.covariate_names[c] = "x" + std::to_string(c);
  }
  panel.standardization.assign(series.covariates.cols(), Standardization{});
  return panel;
}

}  // namespace

TEST_CASE("forward on a single indistinguishable step") {
  // pi = (0.5, 0.5), lambda_1 = lambda_2 = 1, y = 0 -> log L = -1
  auto series = test::make_intercept_series({0});
  auto params = test::make_params({0.0}, {0.0}, 0.0, 0.0, 0.0);
  const ForwardResult res = forward(series, params, 0);
  CHECK(res.log_likelihood == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(res.filtered_probs(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("forward matches the enumeration oracle") {
  Rng rng(101);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t T = 2 + static_cast<std::size_t>(rng.uniform_int(0, 6));
    const auto inst = test::random_instance(rng, T, 3);
    const double fwd = forward(inst.series, inst.params, 0).log_likelihood;
    const double exact = brute_force_loglik(inst.series, inst.params, 0);
    CHECK(std::abs(fwd - exact) < 1e-10);
  }
}

TEST_CASE("forward internals are consistent") {
  Rng rng(102);
  const auto inst = test::random_instance(rng, 12, 2);
  const ForwardResult res = forward(inst.series, inst.params, 0);

  // filtered rows sum to one
  for (std::size_t t = 0; t < 12; ++t) {
    CHECK(res.filtered_probs(t, 0) + res.filtered_probs(t, 1) ==
          doctest::Approx(1.0).epsilon(1e-10));
  }
  // log-likelihood equals log-sum-exp of the final alpha row
  CHECK(res.log_likelihood ==
        doctest::Approx(logaddexp(res.log_alpha(11, 0), res.log_alpha(11, 1)))
            .epsilon(1e-12));
  // and the sum of the per-step normalizers
  double acc = 0.0;
  for (double c : res.log_norm_constants) acc += c;
  CHECK(res.log_likelihood == doctest::Approx(acc).epsilon(1e-10));
}

TEST_CASE("identical emissions collapse to independent Poisson") {
  auto series = test::make_intercept_series({2, 0, 1, 3});
  // same beta in both states; transition structure must not matter
  auto params = test::make_params({0.3}, {0.3}, 0.1, 1.7, -0.4);
  const double fwd = forward(series, params, 0).log_likelihood;
  double expected = 0.0;
  const double lambda = std::exp(0.3 + 0.1);
  for (int y : series.counts) expected += emission_log_pmf(y, lambda);
  CHECK(fwd == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("frozen chain limit") {
  auto series = test::make_intercept_series({0, 1, 0, 2, 0});
  // diagonals -> 1: the likelihood tends to a two-component mixture of
  // constant-state products
  auto params = test::make_params({std::log(0.8)}, {std::log(3.0)}, 0.0, 20.7, 20.7);
  const double fwd = forward(series, params, 0).log_likelihood;
  double prod1 = 0.0, prod2 = 0.0;
  for (int y : series.counts) {
    prod1 += emission_log_pmf(y, 0.8);
    prod2 += emission_log_pmf(y, 3.0);
  }
  const double expected = logaddexp(std::log(0.5) + prod1, std::log(0.5) + prod2);
  CHECK(fwd == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("label-swap symmetry of the likelihood") {
  Rng rng(103);
  for (int rep = 0; rep < 40; ++rep) {
    const auto inst = test::random_instance(rng, 9, 2);
    const double a = forward(inst.series, inst.params, 0).log_likelihood;
    const double b = forward(inst.series, label_swapped(inst.params), 0).log_likelihood;
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("brute force guard and single-step value") {
  auto series = test::make_intercept_series({2});
  auto params = test::make_params({0.1}, {0.9}, 0.0, 0.5, 0.5);
  const TransitionMatrix P = transition_matrix(params, 0);
  const auto pi = initial_distribution(P);
  const double expected = logaddexp(std::log(pi[0]) + emission_log_pmf(2, std::exp(0.1)),
                                    std::log(pi[1]) + emission_log_pmf(2, std::exp(0.9)));
  CHECK(brute_force_loglik(series, params, 0) == doctest::Approx(expected).epsilon(1e-12));

  auto too_long = test::make_intercept_series(std::vector<int>(21, 0));
  CHECK_THROWS_AS(brute_force_loglik(too_long, params, 0), ValidationError);
}

TEST_CASE("panel log-likelihood decomposes over borrowers") {
  Rng rng(104);
  PanelDataset panel;
  ModelParameters params;
  params.beta[0] = {-0.5, 0.2};
  params.beta[1] = {0.4, -0.1};
  params.sigma_u = {1.0};
  params.trans_logit_mean = {1.0, 0.5};
  params.sigma_v = 1.0;
  const std::size_t N = 10;
  for (std::size_t i = 0; i < N; ++i) {
    auto inst = test::random_instance(rng, 6 + i % 4, 2);
    inst.series.borrower_id = "b" + std::to_string(i + 1);
    panel.borrowers.push_back(inst.series);
    params.u.push_back({0.2 * rng.normal()});
    params.trans_logit_dev.push_back({0.3 * rng.normal(), 0.3 * rng.normal()});
  }
  panel.covariate_names = {"intercept", "x1"};
  panel.standardization = {Standardization{}, Standardization{}};

  KahanSum expected;
  for (std::size_t i = 0; i < N; ++i) {
    expected.add(forward(panel.borrowers[i], params, i).log_likelihood);
  }
  CHECK(panel_loglik(panel, params) == doctest::Approx(expected.value()).epsilon(1e-12));

  // two identical borrowers with identical effects -> exactly twice one term
  PanelDataset two;
  two.covariate_names = panel.covariate_names;
  two.standardization = panel.standardization;
  two.borrowers = {panel.borrowers[0], panel.borrowers[0]};
  two.borrowers[1].borrower_id = "b_copy";
  ModelParameters tp = params;
  tp.u = {params.u[0], params.u[0]};
  tp.trans_logit_dev = {params.trans_logit_dev[0], params.trans_logit_dev[0]};
  const double one = forward(two.borrowers[0], tp, 0).log_likelihood;
  CHECK(panel_loglik(two, tp) == doctest::Approx(2.0 * one).epsilon(1e-13));
}

TEST_CASE("log_prior closed form at the origin") {
  const std::size_t N = 3;
  ModelParameters params;
  params.beta[0].assign(4, 0.0);
  params.beta[1].assign(4, 0.0);
  params.u.assign(N, {0.0});
  params.sigma_u = {1.0};
  params.trans_logit_mean = {0.0, 0.0};
  params.trans_logit_dev.assign(N, {0.0, 0.0});
  params.sigma_v = 1.0;
  const PriorConfig priors;  // scales 5, 2.5, 1

  // hand-computed: 8 beta terms, 2 mu terms, 3 u terms, 6 v terms,
  // 2 half-normal terms at sigma = 1 and zero log-Jacobians
  auto lpdf0 = [](double sd) { return -0.5 * kLog2Pi - std::log(sd); };
  const double expected = 8.0 * lpdf0(5.0) + 2.0 * lpdf0(2.5) + 9.0 * lpdf0(1.0) +
                          2.0 * (std::log(2.0) + normal_lpdf(1.0, 0.0, 1.0));
  CHECK(log_prior(params, priors) == doctest::Approx(expected).epsilon(1e-12));

  // shifting one beta component changes the prior by the exact density gap
  ModelParameters shifted = params;
  shifted.beta[0][2] = 1.0;
  const double gap = normal_lpdf(1.0, 0.0, 5.0) - normal_lpdf(0.0, 0.0, 5.0);
  CHECK(log_prior(shifted, priors) - log_prior(params, priors) ==
        doctest::Approx(gap).epsilon(1e-12));

  ModelParameters bad = params;
  bad.sigma_v = 0.0;
  CHECK_THROWS_AS(log_prior(bad, priors), DomainError);
}

TEST_CASE("log_posterior is invariant under borrower reordering") {
  Rng rng(105);
  PanelDataset panel;
  ModelParameters params;
  params.beta[0] = {-0.4};
  params.beta[1] = {0.3};
  params.sigma_u = {0.7};
  params.trans_logit_mean = {1.2, 0.8};
  params.sigma_v = 0.6;
  for (std::size_t i = 0; i < 6; ++i) {
    auto inst = test::random_instance(rng, 5, 1);
    inst.series.borrower_id = "b" + std::to_string(i + 1);
    panel.borrowers.push_back(inst.series);
    params.u.push_back({0.3 * rng.normal()});
    params.trans_logit_dev.push_back({0.2 * rng.normal(), 0.2 * rng.normal()});
  }
  panel.covariate_names = {"intercept"};
  panel.standardization = {Standardization{}};
  const PriorConfig priors;
  const double base = log_posterior(params, panel, priors);

  PanelDataset reordered = panel;
  ModelParameters rparams = params;
  std::reverse(reordered.borrowers.begin(), reordered.borrowers.end());
  std::reverse(rparams.u.begin(), rparams.u.end());
  std::reverse(rparams.trans_logit_dev.begin(), rparams.trans_logit_dev.end());
  CHECK(log_posterior(rparams, reordered, priors) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("forward error paths") {
  auto params = test::make_params({0.0}, {0.0}, 0.0, 0.0, 0.0);
  BorrowerSeries empty;
  empty.borrower_id = "e";
  CHECK_THROWS_AS(forward(empty, params, 0), DimensionError);

  auto series = test::make_intercept_series({1});
  CHECK_THROWS_AS(forward(series, params, 3), DimensionError);

  auto wide = test::make_series({1, 2}, Matrix(2, 3, 1.0));
  CHECK_THROWS_AS(forward(wide, params, 0), DimensionError);
}
