#include "mhmm/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "mhmm/errors.hpp"
#include "mhmm/ingest.hpp"
#include "mhmm/math.hpp"
#include "mhmm/rng.hpp"

namespace mhmm {

namespace {

void validate_sim_config(const SimulationConfig& cfg) {
  if (cfg.n_borrowers < 1) throw ValidationError("simulate: n_borrowers must be >= 1");
  if (cfg.weeks_min < 1 || cfg.weeks_min > cfg.weeks_max) {
    throw ValidationError("simulate: need 1 <= weeks_min <= weeks_max");
  }
  const std::size_t p = cfg.covariates.size() + 1;
  if (cfg.true_params.beta[0].size() != p || cfg.true_params.beta[1].size() != p) {
    throw DimensionError("simulate: beta length must be 1 + number of covariates");
  }
  if (cfg.true_params.sigma_u.empty()) {
    throw DimensionError("simulate: sigma_u must be non-empty");
  }
  for (double s : cfg.true_params.sigma_u) {
    if (!(s > 0.0)) throw DomainError("simulate: sigma_u must be positive");
  }
  if (!(cfg.true_params.sigma_v > 0.0)) throw DomainError("simulate: sigma_v must be positive");
  for (const auto& c : cfg.covariates) {
    if (!(c.sd >= 0.0)) throw ValidationError("simulate: covariate sd must be >= 0");
  }
}

}  // namespace

SimulationResult simulate_panel(const SimulationConfig& config) {
  validate_sim_config(config);
  const std::size_t N = static_cast<std::size_t>(config.n_borrowers);
  const std::size_t q = config.true_params.sigma_u.size();
  const std::size_t n_cov = config.covariates.size();

  SimulationResult result;
  result.truth.seed = config.seed;
  ModelParameters& truth = result.truth.params;
  truth = config.true_params;
  truth.u.assign(N, std::vector<double>(q, 0.0));
  truth.trans_logit_dev.assign(N, {0.0, 0.0});

  // Pass 1: structure, states and raw covariates per borrower. Each borrower
  // gets its own stream so generation order never matters.
  std::vector<RawSeries> raw(N);
  std::vector<std::vector<int>> states(N);
  std::vector<std::string> names;
  names.reserve(n_cov);
  for (const auto& c : config.covariates) names.push_back(c.name);

  for (std::size_t i = 0; i < N; ++i) {
    Rng rng(derive_seed(config.seed, i, 0));
    for (std::size_t j = 0; j < q; ++j) {
      truth.u[i][j] = rng.normal(0.0, truth.sigma_u[j]);
    }
    truth.trans_logit_dev[i][0] = rng.normal(0.0, truth.sigma_v);
    truth.trans_logit_dev[i][1] = rng.normal(0.0, truth.sigma_v);

    const auto T = static_cast<std::size_t>(
        rng.uniform_int(config.weeks_min, config.weeks_max));
    const TransitionMatrix P = transition_matrix(truth, i);
    const std::array<double, 2> pi = initial_distribution(P);

    auto& z = states[i];
    z.resize(T);
    z[0] = (rng.uniform() < pi[0]) ? 1 : 2;
    for (std::size_t t = 1; t < T; ++t) {
      const double stay = P(z[t - 1] - 1, z[t - 1] - 1);
      z[t] = (rng.uniform() < stay) ? z[t - 1] : 3 - z[t - 1];
    }

    raw[i].borrower_id = "b" + std::to_string(i + 1);
    raw[i].counts.assign(T, 0);
    raw[i].raw = Matrix(T, n_cov);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t c = 0; c < n_cov; ++c) {
        double x = rng.normal(config.covariates[c].mean, config.covariates[c].sd);
        if (config.covariates[c].clamp_nonnegative) x = std::max(0.0, x);
        raw[i].raw(t, c) = x;
      }
    }
  }

  // Pass 2: standardize panel-wide, then sample counts at the realized rates.
  result.panel = assemble_panel(std::move(raw), std::move(names), true);
  result.truth.paths.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    Rng rng(derive_seed(config.seed, i, 1));
    auto& b = result.panel.borrowers[i];
    auto& path = result.truth.paths[i];
    path.borrower_id = b.borrower_id;
    path.states = states[i];
    path.log_joint = 0.0;
    for (std::size_t t = 0; t < b.n_weeks(); ++t) {
      const int k = states[i][t] - 1;
      const double eta = dot(b.covariates.row(t), truth.beta[k]) +
                         dot(b.re_design.row(t), truth.u[i]);
      b.counts[t] = static_cast<int>(rng.poisson(std::exp(eta)));
    }
  }
  return result;
}

SimulationConfig acceptance_config() {
  SimulationConfig cfg;
  cfg.n_borrowers = 200;
  cfg.weeks_min = 40;
  cfg.weeks_max = 60;
  cfg.seed = 97531;
  cfg.covariates = {
      {"x1", 0.0, 1.0, false},
      {"x2", 0.0, 1.0, false},
      {"x3", 0.0, 1.0, false},
      {"x4", 0.0, 1.0, false},
  };
  cfg.true_params.beta[0] = {-2.0, -0.3, 0.2, -0.4, 0.1};
  cfg.true_params.beta[1] = {-0.3, 0.4, 0.2, 0.5, -0.1};
  cfg.true_params.sigma_u = {0.5};
  cfg.true_params.trans_logit_mean = {2.2, 1.4};
  cfg.true_params.sigma_v = 0.5;
  return cfg;
}

SimulationResult acceptance_panel() { return simulate_panel(acceptance_config()); }

std::vector<CovariateSpec> default_transaction_covariates() {
  // Weekly amount / transaction-count moments per category; also the column
  // order of the panel CSV format.
  struct Row {
    TransactionCategory cat;
    double amount_mean, amount_sd, count_mean, count_sd;
  };
  static const Row rows[] = {
      {TransactionCategory::BasicExpenses, 499.34, 184.21, 13.50, 2.34},
      {TransactionCategory::DiscretionaryExpenses, 988.93, 266.42, 19.73, 2.51},
      {TransactionCategory::NonRecurrentIncome, 1049.17, 273.47, 5.57, 0.38},
      {TransactionCategory::BasicTransfers, 17.24, 2.50, 0.68, 0.07},
      {TransactionCategory::DiscretionaryTransfers, 90.64, 18.98, 1.34, 0.10},
      {TransactionCategory::NonRecurrentTransfers, 112.19, 33.16, 0.63, 0.10},
      {TransactionCategory::RecurrentIncome, 479.09, 372.86, 0.67, 0.23},
      {TransactionCategory::LuxuryExpenses, 38.76, 8.35, 1.19, 0.19},
  };
  std::vector<CovariateSpec> specs;
  specs.reserve(16);
  for (const auto& r : rows) {
    const std::string base(category_name(r.cat));
    specs.push_back({base + "_amount", r.amount_mean, r.amount_sd, true});
    specs.push_back({base + "_n_transactions", r.count_mean, r.count_sd, true});
  }
  return specs;
}

SimulationConfig default_transaction_config() {
  SimulationConfig cfg;
  cfg.n_borrowers = 200;
  cfg.weeks_min = 40;
  cfg.weeks_max = 60;
  cfg.seed = 1;
  cfg.covariates = default_transaction_covariates();
  const std::size_t p = cfg.covariates.size() + 1;
  cfg.true_params.beta[0].assign(p, 0.0);
  cfg.true_params.beta[1].assign(p, 0.0);
  cfg.true_params.beta[0][0] = -2.0;
  cfg.true_params.beta[1][0] = -0.3;
  // Small alternating effects, a few flipping sign across states.
  for (std::size_t j = 1; j < p; ++j) {
    const double base = (j % 2 == 0) ? 0.1 : -0.1;
    cfg.true_params.beta[0][j] = base;
    cfg.true_params.beta[1][j] = (j % 3 == 0) ? -base : base;
  }
  cfg.true_params.sigma_u = {0.5};
  cfg.true_params.trans_logit_mean = {2.2, 1.4};
  cfg.true_params.sigma_v = 0.5;
  return cfg;
}

PanelDataset truncate_weeks(const PanelDataset& panel, int max_weeks, bool standardize) {
  if (max_weeks < 1) throw ValidationError("truncate_weeks: max_weeks must be >= 1");
  std::vector<RawSeries> raw;
  raw.reserve(panel.n_borrowers());
  for (const auto& b : panel.borrowers) {
    if (b.raw_covariates.rows() != b.n_weeks()) {
      throw ValidationError("truncate_weeks: panel lacks raw covariates");
    }
    const std::size_t T = std::min<std::size_t>(b.n_weeks(),
                                                static_cast<std::size_t>(max_weeks));
    RawSeries r;
    r.borrower_id = b.borrower_id;
    r.counts.assign(b.counts.begin(), b.counts.begin() + static_cast<long>(T));
    r.raw = Matrix(T, b.raw_covariates.cols());
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t c = 0; c < b.raw_covariates.cols(); ++c) {
        r.raw(t, c) = b.raw_covariates(t, c);
      }
    }
    raw.push_back(std::move(r));
  }
  std::vector<std::string> names(panel.covariate_names.begin() + 1,
                                 panel.covariate_names.end());
  return assemble_panel(std::move(raw), std::move(names), standardize);
}

}  // namespace mhmm
