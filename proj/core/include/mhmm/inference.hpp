#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mhmm/model.hpp"

namespace mhmm {

enum class ModelKind {
  MePoissonHmm,  // two hidden states
  MePoisson      // no hidden states; single beta, same random intercepts
};

const char* model_tag(ModelKind kind);  // "ME-Poisson-HMM" / "ME-Poisson"

// Which sampler blocks move. Default: all. Freezing blocks conditions the
// posterior on their initial values, which the acceptance grid oracle and the
// no-hidden-state baseline rely on.
struct UpdateMask {
  bool beta1 = true;
  bool beta2 = true;
  bool u = true;
  bool v = true;
  bool mu = true;
  bool sigma_u = true;
  bool sigma_v = true;
};

struct McmcConfig {
  int chains = 4;
  int iterations = 5000;
  int burn_in = 2500;
  int thinning = 1;
  std::uint64_t seed = 1;
  int adapt_window = 50;
  double target_accept = 0.30;
  int threads = 0;  // 0 = one thread per chain
  UpdateMask update_mask;
  // Overrides the data-driven initial state; frozen blocks keep these values.
  std::shared_ptr<const ModelParameters> initial;
};

struct PosteriorSamples {
  ModelKind model = ModelKind::MePoissonHmm;
  std::size_t n_borrowers = 0;
  std::size_t n_covariates = 0;
  std::size_t n_random_effects = 0;
  std::vector<ModelParameters> draws;   // post burn-in, thinned, relabeled
  std::vector<int> chain_ids;           // parallel to draws
  std::vector<int> iterations;          // original sweep index, parallel to draws
  std::vector<double> log_posterior_trace;
  // Post-burn-in acceptance rates per adapted block; u/v report min/mean/max
  // across borrowers.
  std::vector<std::pair<std::string, double>> acceptance_rates;

  std::size_t size() const noexcept { return draws.size(); }
};

struct ParameterSummary {
  std::string name;
  double median = 0.0;
  double q75_lo = 0.0, q75_hi = 0.0;  // equal-tailed 75% interval
  double q90_lo = 0.0, q90_hi = 0.0;  // equal-tailed 90% interval
};

struct FixedEffectDiagnostic {
  std::string name;
  double r_hat = 0.0;
  double ess = 0.0;
};

struct PosteriorSummary {
  std::vector<ParameterSummary> parameters;
  std::vector<FixedEffectDiagnostic> beta_diagnostics;
};

// Named access to every scalar parameter of a draw, in a fixed order shared
// by the summarizer and the samples file format. Names are 1-based:
// beta[k][j], u[i] (u[i][j] when q > 1), v[i][k], mu[k], sigma_u
// (sigma_u[j] when q > 1), sigma_v. The baseline enumerates only
// beta[1][j], u[i] and sigma_u.
struct ParameterView {
  std::string name;
  std::function<double(const ModelParameters&)> get;
  std::function<void(ModelParameters&, double)> set;
};

std::vector<ParameterView> parameter_views(ModelKind kind, std::size_t n_borrowers,
                                           std::size_t n_covariates,
                                           std::size_t n_random_effects);

// Adaptive Metropolis-within-Gibbs over the blocks
//   beta1, beta2 (joint random walks), each u_i, each (v_i1, v_i2),
//   (mu1, mu2), log sigma_u[j], log sigma_v.
// Proposal scales adapt toward target_accept during burn-in, then freeze.
// Retained draws are relabeled so beta[1][0] > beta[0][0]. Chains run on
// independent seed streams; results are identical across runs and thread
// counts for a fixed config.
PosteriorSamples run_mcmc(const PanelDataset& panel, const PriorConfig& priors,
                          const McmcConfig& config);

// Baseline without hidden states: one beta (stored in both slots so
// downstream prediction code works unchanged), same random intercepts.
PosteriorSamples fit_me_poisson(const PanelDataset& panel, const PriorConfig& priors,
                                const McmcConfig& config);

// Medians plus 75%/90% equal-tailed intervals for every parameter, and
// split-chain R-hat / effective sample size for the fixed effects.
PosteriorSummary summarize(const PosteriorSamples& samples);

// Parameter-wise posterior medians assembled into a point estimate.
ModelParameters posterior_median_parameters(const PosteriorSamples& samples);

}  // namespace mhmm
