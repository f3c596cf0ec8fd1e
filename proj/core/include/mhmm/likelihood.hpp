#pragma once

#include <cstddef>
#include <vector>

#include "mhmm/matrix.hpp"
#include "mhmm/model.hpp"

namespace mhmm {

// Output of the forward pass for one borrower.
//   log_alpha(t, k)       exact log p(y_1..t, Z_t = k+1)
//   log_norm_constants[t] log p(y_t | y_1..t-1); they sum to log_likelihood
//   filtered_probs(t, k)  p(Z_t = k+1 | y_1..t), rows sum to 1
struct ForwardResult {
  double log_likelihood = 0.0;
  Matrix log_alpha;
  std::vector<double> log_norm_constants;
  Matrix filtered_probs;
};

// Log-space forward recursion with log-sum-exp; exact marginal likelihood of
// one borrower's count sequence. Throws NumericError (with the failing step)
// if the running mass becomes NaN or collapses to -inf, which signals
// pathological parameters rather than unlikely data.
ForwardResult forward(const BorrowerSeries& series, const ModelParameters& params,
                      std::size_t borrower_index);

// Exact marginal likelihood by explicit enumeration of all 2^T state
// sequences. Test oracle; refuses T > 20.
double brute_force_loglik(const BorrowerSeries& series, const ModelParameters& params,
                          std::size_t borrower_index);

// Sum of per-borrower forward log-likelihoods, accumulated in fixed order
// with compensation so the reduction is deterministic to 1e-12.
double panel_loglik(const PanelDataset& panel, const ModelParameters& params);

// Log-density of the priors at params, including the log-Jacobian of the
// log-scale parameterization the sampler uses for sigma_u and sigma_v.
double log_prior(const ModelParameters& params, const PriorConfig& priors);

// panel_loglik + log_prior; the sampler's target.
double log_posterior(const ModelParameters& params, const PanelDataset& panel,
                     const PriorConfig& priors);

}  // namespace mhmm
