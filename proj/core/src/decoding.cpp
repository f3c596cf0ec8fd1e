#include "mhmm/decoding.hpp"

#include <cmath>

#include "mhmm/errors.hpp"
#include "mhmm/likelihood.hpp"
#include "mhmm/math.hpp"

namespace mhmm {

namespace {

std::array<double, 2> log_emissions_at(const BorrowerSeries& series,
                                       const ModelParameters& params,
                                       std::size_t borrower_index, std::size_t t) {
  const double re = dot(series.re_design.row(t), params.u[borrower_index]);
  const double lfact = std::lgamma(static_cast<double>(series.counts[t]) + 1.0);
  std::array<double, 2> out;
  for (int k = 0; k < 2; ++k) {
    const double eta = dot(series.covariates.row(t), params.beta[k]) + re;
    out[k] = emission_log_pmf_at_log_rate(series.counts[t], eta, lfact);
  }
  return out;
}

}  // namespace

StatePath viterbi(const BorrowerSeries& series, const ModelParameters& params,
                  std::size_t borrower_index) {
  if (series.n_weeks() == 0) throw DimensionError("viterbi: series has no weeks");
  const std::size_t T = series.n_weeks();
  const TransitionMatrix P = transition_matrix(params, borrower_index);
  const std::array<double, 2> pi = initial_distribution(P);
  const std::array<std::array<double, 2>, 2> logP = {
      {{std::log(P(0, 0)), std::log(P(0, 1))}, {std::log(P(1, 0)), std::log(P(1, 1))}}};

  Matrix delta(T, 2);
  std::vector<std::array<int, 2>> psi(T);

  auto le = log_emissions_at(series, params, borrower_index, 0);
  delta(0, 0) = std::log(pi[0]) + le[0];
  delta(0, 1) = std::log(pi[1]) + le[1];

  for (std::size_t t = 1; t < T; ++t) {
    le = log_emissions_at(series, params, borrower_index, t);
    for (int k = 0; k < 2; ++k) {
      const double from1 = delta(t - 1, 0) + logP[0][k];
      const double from2 = delta(t - 1, 1) + logP[1][k];
      // Strict comparison: predecessor state 1 wins ties.
      const int arg = (from2 > from1) ? 1 : 0;
      psi[t][k] = arg;
      delta(t, k) = ((arg == 1) ? from2 : from1) + le[k];
    }
  }

  StatePath path;
  path.borrower_id = series.borrower_id;
  path.states.resize(T);
  int z = (delta(T - 1, 1) > delta(T - 1, 0)) ? 1 : 0;
  path.log_joint = delta(T - 1, z);
  path.states[T - 1] = z + 1;
  for (std::size_t t = T - 1; t > 0; --t) {
    z = psi[t][z];
    path.states[t - 1] = z + 1;
  }
  return path;
}

Matrix forward_backward(const BorrowerSeries& series, const ModelParameters& params,
                        std::size_t borrower_index) {
  const ForwardResult fwd = forward(series, params, borrower_index);
  const std::size_t T = series.n_weeks();
  const TransitionMatrix P = transition_matrix(params, borrower_index);
  const std::array<std::array<double, 2>, 2> logP = {
      {{std::log(P(0, 0)), std::log(P(0, 1))}, {std::log(P(1, 0)), std::log(P(1, 1))}}};

  Matrix log_beta(T, 2, 0.0);
  for (std::size_t t = T - 1; t > 0; --t) {
    const auto le = log_emissions_at(series, params, borrower_index, t);
    for (int j = 0; j < 2; ++j) {
      log_beta(t - 1, j) = logaddexp(logP[j][0] + le[0] + log_beta(t, 0),
                                     logP[j][1] + le[1] + log_beta(t, 1));
    }
  }

  Matrix smoothed(T, 2);
  for (std::size_t t = 0; t < T; ++t) {
    const double l0 = fwd.log_alpha(t, 0) + log_beta(t, 0);
    const double l1 = fwd.log_alpha(t, 1) + log_beta(t, 1);
    const double total = logaddexp(l0, l1);
    smoothed(t, 0) = std::exp(l0 - total);
    smoothed(t, 1) = std::exp(l1 - total);
  }
  return smoothed;
}

std::vector<StatePath> decode_panel(const PanelDataset& panel,
                                    const PosteriorSamples& samples) {
  if (samples.draws.empty()) throw ValidationError("decode_panel: no posterior draws");
  const ModelParameters point = posterior_median_parameters(samples);
  validate_compatible(panel, point);
  std::vector<StatePath> paths;
  paths.reserve(panel.n_borrowers());
  for (std::size_t i = 0; i < panel.n_borrowers(); ++i) {
    paths.push_back(viterbi(panel.borrowers[i], point, i));
  }
  return paths;
}

}  // namespace mhmm
