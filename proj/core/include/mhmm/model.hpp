#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mhmm/matrix.hpp"

namespace mhmm {

// One borrower's weekly panel: loan counts plus covariate rows. Weeks are
// strictly increasing and contiguous from 1; covariates are the model matrix
// (standardized, intercept in column 0). raw_covariates holds the
// pre-standardization values (no intercept column) when the series came from
// a file or the simulator; it may be empty for series built in code.
struct BorrowerSeries {
  std::string borrower_id;
  std::vector<int> weeks;
  std::vector<int> counts;
  Matrix covariates;       // T x p
  Matrix re_design;        // T x q
  Matrix raw_covariates;   // T x (p-1), optional

  std::size_t n_weeks() const noexcept { return weeks.size(); }

  friend bool operator==(const BorrowerSeries&, const BorrowerSeries&) = default;
};

// Affine transform applied per covariate at ingestion: model = (raw - mean) / scale.
struct Standardization {
  double mean = 0.0;
  double scale = 1.0;

  friend bool operator==(const Standardization&, const Standardization&) = default;
};

struct PanelDataset {
  std::vector<BorrowerSeries> borrowers;
  std::vector<std::string> covariate_names;     // p labels, [0] == "intercept"
  std::vector<Standardization> standardization; // p entries, identity for intercept

  std::size_t n_borrowers() const noexcept { return borrowers.size(); }
  std::size_t n_covariates() const {
    return borrowers.empty() ? covariate_names.size() : borrowers.front().covariates.cols();
  }
  std::size_t n_random_effects() const {
    return borrowers.empty() ? 0 : borrowers.front().re_design.cols();
  }

  friend bool operator==(const PanelDataset&, const PanelDataset&) = default;
};

// Full parameter state of the two-state mixed hidden Markov model.
//   beta[k]          state-indexed fixed effects (k = 0, 1 for states 1, 2)
//   u[i]             per-borrower random effects, length q
//   sigma_u[j]       scale of random-effect component j
//   trans_logit_mean population logits of the diagonal persistence probabilities
//   trans_logit_dev  per-borrower deviations (v_i1, v_i2)
//   sigma_v          scale of the deviations
// State 2 is identified as the high-baseline-rate state: beta[1][0] > beta[0][0].
struct ModelParameters {
  std::array<std::vector<double>, 2> beta;
  std::vector<std::vector<double>> u;
  std::vector<double> sigma_u;
  std::array<double, 2> trans_logit_mean{0.0, 0.0};
  std::vector<std::array<double, 2>> trans_logit_dev;
  double sigma_v = 1.0;

  bool satisfies_identification() const {
    return !beta[0].empty() && !beta[1].empty() && beta[1][0] > beta[0][0];
  }

  friend bool operator==(const ModelParameters&, const ModelParameters&) = default;
};

struct PriorConfig {
  double beta_prior_scale = 5.0;
  double trans_mean_prior_scale = 2.5;
  double sigma_half_normal_scale = 1.0;
};

// Row-stochastic by construction: off-diagonals are complements of the
// clamped diagonal entries, so rows sum to 1 exactly.
struct TransitionMatrix {
  std::array<std::array<double, 2>, 2> p;

  double operator()(int from, int to) const { return p[from][to]; }

  static TransitionMatrix from_diagonals(double stay1, double stay2) {
    return TransitionMatrix{{{{stay1, 1.0 - stay1}, {1.0 - stay2, stay2}}}};
  }
};

// lambda_k(x, u) = exp(x . beta_k + d . u); strictly positive for finite inputs.
double emission_rate(std::span<const double> x, std::span<const double> beta_k,
                     std::span<const double> d, std::span<const double> u_i);

// log Poisson pmf, computed through lgamma so large counts stay stable.
double emission_log_pmf(long y, double lambda);

// Same pmf evaluated at eta = log lambda with a precomputed log(y!); the hot
// path used by the likelihood recursions.
inline double emission_log_pmf_at_log_rate(long y, double eta, double log_factorial) {
  return static_cast<double>(y) * eta - std::exp(eta) - log_factorial;
}

// Borrower-specific transition matrix: diagonal k is logistic(mu_k + v_ik).
TransitionMatrix transition_matrix(const ModelParameters& params, std::size_t borrower_index);

// Stationary distribution of P, used as the initial state distribution.
std::array<double, 2> initial_distribution(const TransitionMatrix& P);

// Invariant checks; throw DimensionError / ValidationError with a description.
void validate_panel(const PanelDataset& panel);
void validate_compatible(const PanelDataset& panel, const ModelParameters& params);

// Pre-standardization inputs for one borrower; weeks implicitly 1..T.
struct RawSeries {
  std::string borrower_id;
  std::vector<int> counts;
  Matrix raw;  // T x (p-1), no intercept column
};

// Builds a PanelDataset from raw covariates: panel-wide z-scores (sample SD)
// per column when standardize is set, identity transforms otherwise; an
// intercept column is prepended and a random-intercept design (q = 1) added.
PanelDataset assemble_panel(std::vector<RawSeries> raw,
                            std::vector<std::string> raw_covariate_names,
                            bool standardize);

}  // namespace mhmm
