#include "mhmm/likelihood.hpp"

#include <cmath>
#include <string>

#include "mhmm/errors.hpp"
#include "mhmm/math.hpp"

namespace mhmm {

namespace {

void check_series(const BorrowerSeries& series, const ModelParameters& params,
                  std::size_t borrower_index) {
  if (series.n_weeks() == 0) throw DimensionError("forward: series has no weeks");
  if (borrower_index >= params.u.size() || borrower_index >= params.trans_logit_dev.size()) {
    throw DimensionError("forward: borrower index out of range for parameters");
  }
  if (series.covariates.cols() != params.beta[0].size() ||
      series.covariates.cols() != params.beta[1].size()) {
    throw DimensionError("forward: covariate width does not match beta");
  }
  if (series.re_design.cols() != params.u[borrower_index].size()) {
    throw DimensionError("forward: design width does not match random effects");
  }
}

// log emission pmf for both states at week t.
std::array<double, 2> log_emissions(const BorrowerSeries& series,
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

ForwardResult forward(const BorrowerSeries& series, const ModelParameters& params,
                      std::size_t borrower_index) {
  check_series(series, params, borrower_index);
  const std::size_t T = series.n_weeks();
  const TransitionMatrix P = transition_matrix(params, borrower_index);
  const std::array<double, 2> pi = initial_distribution(P);

  ForwardResult res;
  res.log_alpha = Matrix(T, 2);
  res.filtered_probs = Matrix(T, 2);
  res.log_norm_constants.resize(T);

  const std::array<std::array<double, 2>, 2> logP = {
      {{std::log(P(0, 0)), std::log(P(0, 1))}, {std::log(P(1, 0)), std::log(P(1, 1))}}};

  double prev_total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto le = log_emissions(series, params, borrower_index, t);
    for (int k = 0; k < 2; ++k) {
      double la;
      if (t == 0) {
        la = std::log(pi[k]) + le[k];
      } else {
        la = logaddexp(res.log_alpha(t - 1, 0) + logP[0][k],
                       res.log_alpha(t - 1, 1) + logP[1][k]) +
             le[k];
      }
      res.log_alpha(t, k) = la;
    }
    const double total = logaddexp(res.log_alpha(t, 0), res.log_alpha(t, 1));
    if (std::isnan(total) || total == kNegInf) {
      throw NumericError("forward: non-finite mass for borrower " + series.borrower_id +
                             " at step " + std::to_string(t + 1),
                         static_cast<long>(t + 1));
    }
    res.log_norm_constants[t] = (t == 0) ? total : total - prev_total;
    res.filtered_probs(t, 0) = std::exp(res.log_alpha(t, 0) - total);
    res.filtered_probs(t, 1) = std::exp(res.log_alpha(t, 1) - total);
    prev_total = total;
  }
  res.log_likelihood = prev_total;
  return res;
}

double brute_force_loglik(const BorrowerSeries& series, const ModelParameters& params,
                          std::size_t borrower_index) {
  check_series(series, params, borrower_index);
  const std::size_t T = series.n_weeks();
  if (T > 20) throw ValidationError("brute_force_loglik: refusing T > 20");

  const TransitionMatrix P = transition_matrix(params, borrower_index);
  const std::array<double, 2> pi = initial_distribution(P);

  // Cache the per-week emission terms once; enumeration only mixes them.
  std::vector<std::array<double, 2>> le(T);
  for (std::size_t t = 0; t < T; ++t) {
    le[t] = log_emissions(series, params, borrower_index, t);
  }

  double total = kNegInf;
  for (std::uint64_t mask = 0; mask < (1ULL << T); ++mask) {
    int z = static_cast<int>(mask & 1);
    double lp = std::log(pi[z]) + le[0][z];
    for (std::size_t t = 1; t < T; ++t) {
      const int znext = static_cast<int>((mask >> t) & 1);
      lp += std::log(P(z, znext)) + le[t][znext];
      z = znext;
    }
    total = logaddexp(total, lp);
  }
  return total;
}

double panel_loglik(const PanelDataset& panel, const ModelParameters& params) {
  validate_compatible(panel, params);
  KahanSum sum;
  for (std::size_t i = 0; i < panel.borrowers.size(); ++i) {
    sum.add(forward(panel.borrowers[i], params, i).log_likelihood);
  }
  return sum.value();
}

double log_prior(const ModelParameters& params, const PriorConfig& priors) {
  if (!(priors.beta_prior_scale > 0.0) || !(priors.trans_mean_prior_scale > 0.0) ||
      !(priors.sigma_half_normal_scale > 0.0)) {
    throw DomainError("log_prior: prior scales must be strictly positive");
  }
  for (double s : params.sigma_u) {
    if (!(s > 0.0)) throw DomainError("log_prior: sigma_u must be strictly positive");
  }
  if (!(params.sigma_v > 0.0)) throw DomainError("log_prior: sigma_v must be strictly positive");

  KahanSum lp;
  for (int k = 0; k < 2; ++k) {
    for (double b : params.beta[k]) lp.add(normal_lpdf(b, 0.0, priors.beta_prior_scale));
    lp.add(normal_lpdf(params.trans_logit_mean[k], 0.0, priors.trans_mean_prior_scale));
  }
  for (const auto& u_i : params.u) {
    for (std::size_t j = 0; j < u_i.size(); ++j) {
      lp.add(normal_lpdf(u_i[j], 0.0, params.sigma_u[j]));
    }
  }
  for (const auto& v_i : params.trans_logit_dev) {
    lp.add(normal_lpdf(v_i[0], 0.0, params.sigma_v));
    lp.add(normal_lpdf(v_i[1], 0.0, params.sigma_v));
  }
  for (double s : params.sigma_u) {
    lp.add(half_normal_lpdf(s, priors.sigma_half_normal_scale));
    lp.add(std::log(s));  // Jacobian of the log-scale parameterization
  }
  lp.add(half_normal_lpdf(params.sigma_v, priors.sigma_half_normal_scale));
  lp.add(std::log(params.sigma_v));
  return lp.value();
}

double log_posterior(const ModelParameters& params, const PanelDataset& panel,
                     const PriorConfig& priors) {
  return panel_loglik(panel, params) + log_prior(params, priors);
}

}  // namespace mhmm
