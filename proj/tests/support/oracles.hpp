#pragma once

// Exhaustive reference computations over the 2^T state space plus random
// instance generation. Everything here recomputes joint probabilities
// directly from the model primitives; none of it shares code with the
// dynamic-programming paths under test.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mhmm/math.hpp"
#include "mhmm/matrix.hpp"
#include "mhmm/model.hpp"
#include "mhmm/rng.hpp"

namespace mhmm::test {

struct Instance {
  BorrowerSeries series;
  ModelParameters params;
};

// Single-borrower series with intercept-only or (1 + n_extra) covariates.
inline BorrowerSeries make_series(std::vector<int> counts, const Matrix& covariates) {
  BorrowerSeries b;
  b.borrower_id = "b1";
  const std::size_t T = counts.size();
  b.weeks.resize(T);
  for (std::size_t t = 0; t < T; ++t) b.weeks[t] = static_cast<int>(t) + 1;
  b.counts = std::move(counts);
  b.covariates = covariates;
  b.re_design = Matrix(T, 1, 1.0);
  return b;
}

inline BorrowerSeries make_intercept_series(std::vector<int> counts) {
  const std::size_t T = counts.size();
  return make_series(std::move(counts), Matrix(T, 1, 1.0));
}

// Single-borrower parameters with q = 1.
inline ModelParameters make_params(std::vector<double> beta1, std::vector<double> beta2,
                                   double u, double mu1, double mu2, double v1 = 0.0,
                                   double v2 = 0.0) {
  ModelParameters p;
  p.beta[0] = std::move(beta1);
  p.beta[1] = std::move(beta2);
  p.u = {{u}};
  p.sigma_u = {1.0};
  p.trans_logit_mean = {mu1, mu2};
  p.trans_logit_dev = {{v1, v2}};
  p.sigma_v = 1.0;
  return p;
}

// log p(y, z) for a concrete state sequence (states in {1,2}).
inline double path_log_joint(const BorrowerSeries& series, const ModelParameters& params,
                             std::size_t idx, const std::vector<int>& states) {
  const TransitionMatrix P = transition_matrix(params, idx);
  const std::array<double, 2> pi = initial_distribution(P);
  double lp = std::log(pi[states[0] - 1]);
  for (std::size_t t = 0; t < series.n_weeks(); ++t) {
    const int k = states[t] - 1;
    const double eta = dot(series.covariates.row(t), params.beta[k]) +
                       dot(series.re_design.row(t), params.u[idx]);
    lp += emission_log_pmf(series.counts[t], std::exp(eta));
    if (t > 0) lp += std::log(P(states[t - 1] - 1, k));
  }
  return lp;
}

inline std::vector<int> states_from_mask(std::uint64_t mask, std::size_t T) {
  std::vector<int> z(T);
  for (std::size_t t = 0; t < T; ++t) z[t] = 1 + static_cast<int>((mask >> t) & 1);
  return z;
}

struct EnumDecode {
  std::vector<int> states;
  double log_joint = 0.0;
};

// Exhaustive MAP path. Masks ascend with z_T in the most significant bit, so
// the first maximum under strict comparison is the reverse-lexicographically
// smallest maximizer: the same path the Viterbi state-1 tie-break selects.
inline EnumDecode enumerate_map_path(const BorrowerSeries& series,
                                     const ModelParameters& params, std::size_t idx) {
  const std::size_t T = series.n_weeks();
  EnumDecode best;
  best.log_joint = -std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < (1ULL << T); ++mask) {
    const auto z = states_from_mask(mask, T);
    const double lp = path_log_joint(series, params, idx, z);
    if (lp > best.log_joint) {
      best.log_joint = lp;
      best.states = z;
    }
  }
  return best;
}

// Exhaustive smoothed marginals p(Z_t = k | y).
inline Matrix enumerate_smoothed(const BorrowerSeries& series, const ModelParameters& params,
                                 std::size_t idx) {
  const std::size_t T = series.n_weeks();
  Matrix acc(T, 2, kNegInf);
  double total = kNegInf;
  for (std::uint64_t mask = 0; mask < (1ULL << T); ++mask) {
    const auto z = states_from_mask(mask, T);
    const double lp = path_log_joint(series, params, idx, z);
    total = logaddexp(total, lp);
    for (std::size_t t = 0; t < T; ++t) {
      acc(t, z[t] - 1) = logaddexp(acc(t, z[t] - 1), lp);
    }
  }
  Matrix out(T, 2);
  for (std::size_t t = 0; t < T; ++t) {
    out(t, 0) = std::exp(acc(t, 0) - total);
    out(t, 1) = std::exp(acc(t, 1) - total);
  }
  return out;
}

// Random single-borrower instance with moderate rates and counts capped at 20.
inline Instance random_instance(Rng& rng, std::size_t T, std::size_t p) {
  Instance inst;
  Matrix x(T, p);
  for (std::size_t t = 0; t < T; ++t) {
    x(t, 0) = 1.0;
    for (std::size_t c = 1; c < p; ++c) x(t, c) = rng.normal();
  }
  auto coef = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  std::vector<double> b1(p), b2(p);
  for (std::size_t c = 0; c < p; ++c) {
    b1[c] = coef(-0.8, 0.8);
    b2[c] = coef(-0.8, 0.8);
  }
  inst.params = make_params(std::move(b1), std::move(b2), coef(-0.5, 0.5), coef(-1.0, 2.5),
                            coef(-1.0, 2.5), coef(-0.5, 0.5), coef(-0.5, 0.5));

  std::vector<int> counts(T);
  const TransitionMatrix P = transition_matrix(inst.params, 0);
  const std::array<double, 2> pi = initial_distribution(P);
  int z = (rng.uniform() < pi[0]) ? 0 : 1;
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0) z = (rng.uniform() < P(z, z)) ? z : 1 - z;
    double eta = dot(x.row(t), inst.params.beta[z]) + inst.params.u[0][0];
    counts[t] = static_cast<int>(std::min<long>(rng.poisson(std::exp(eta)), 20));
  }
  inst.series = make_series(std::move(counts), x);
  return inst;
}

}  // namespace mhmm::test
