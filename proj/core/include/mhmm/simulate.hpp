#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mhmm/decoding.hpp"
#include "mhmm/model.hpp"

namespace mhmm {

// Raw covariate generator: independent Gaussians at the given moments.
// clamp_nonnegative truncates negative draws to zero before standardization,
// for columns that represent amounts or transaction counts.
struct CovariateSpec {
  std::string name;
  double mean = 0.0;
  double sd = 1.0;
  bool clamp_nonnegative = false;
};

struct SimulationConfig {
  int n_borrowers = 0;
  int weeks_min = 1;
  int weeks_max = 1;  // T_i drawn uniformly from [weeks_min, weeks_max]
  // Population-level truth: beta, sigma_u, trans_logit_mean, sigma_v. The
  // per-borrower u / trans_logit_dev fields are ignored; they are drawn from
  // their Normal laws and returned in the truth bundle.
  ModelParameters true_params;
  std::vector<CovariateSpec> covariates;  // non-intercept columns
  std::uint64_t seed = 0;
};

struct SimulationTruth {
  ModelParameters params;        // realized, including drawn u and v
  std::vector<StatePath> paths;  // true state sequences
  std::uint64_t seed = 0;
};

struct SimulationResult {
  PanelDataset panel;
  SimulationTruth truth;
};

// Generative pass of the model: draw u_i, v_i, the state chain from the
// stationary start, Gaussian covariates (standardized panel-wide), then
// counts from the state-dependent Poisson rates. Byte-deterministic under
// seed; borrowers use independent derived streams.
SimulationResult simulate_panel(const SimulationConfig& config);

// Canonical recovery fixture: N = 200, T in [40, 60], intercept + 4
// covariates with cross-state sign flips, pinned seed.
SimulationResult acceptance_panel();
SimulationConfig acceptance_config();

// Simulator defaults calibrated to weekly transaction summary moments for the
// eight categories (amount and transaction count each, 16 columns).
std::vector<CovariateSpec> default_transaction_covariates();
SimulationConfig default_transaction_config();

// Sub-panel with every series truncated to at most max_weeks, re-assembled
// from raw covariates (requires them) and re-standardized.
PanelDataset truncate_weeks(const PanelDataset& panel, int max_weeks,
                            bool standardize = true);

}  // namespace mhmm
