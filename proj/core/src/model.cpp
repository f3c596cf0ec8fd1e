#include "mhmm/model.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "mhmm/errors.hpp"
#include "mhmm/math.hpp"

namespace mhmm {

double emission_rate(std::span<const double> x, std::span<const double> beta_k,
                     std::span<const double> d, std::span<const double> u_i) {
  if (x.size() != beta_k.size()) {
    throw DimensionError("emission_rate: covariate length " + std::to_string(x.size()) +
                         " does not match coefficient length " + std::to_string(beta_k.size()));
  }
  if (d.size() != u_i.size()) {
    throw DimensionError("emission_rate: design length " + std::to_string(d.size()) +
                         " does not match random-effect length " + std::to_string(u_i.size()));
  }
  return std::exp(dot(x, beta_k) + dot(d, u_i));
}

double emission_log_pmf(long y, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("emission_log_pmf: rate must be positive");
  if (y < 0) throw DomainError("emission_log_pmf: count must be non-negative");
  return static_cast<double>(y) * std::log(lambda) - lambda -
         std::lgamma(static_cast<double>(y) + 1.0);
}

TransitionMatrix transition_matrix(const ModelParameters& params, std::size_t borrower_index) {
  if (borrower_index >= params.trans_logit_dev.size()) {
    throw DimensionError("transition_matrix: borrower index " + std::to_string(borrower_index) +
                         " out of range");
  }
  const auto& v = params.trans_logit_dev[borrower_index];
  return TransitionMatrix::from_diagonals(logistic(params.trans_logit_mean[0] + v[0]),
                                          logistic(params.trans_logit_mean[1] + v[1]));
}

std::array<double, 2> initial_distribution(const TransitionMatrix& P) {
  const double off = P(0, 1) + P(1, 0);
  if (!(off > 0.0)) throw DomainError("initial_distribution: degenerate chain");
  const double pi1 = P(1, 0) / off;
  return {pi1, 1.0 - pi1};
}

void validate_panel(const PanelDataset& panel) {
  if (panel.borrowers.empty()) throw ValidationError("panel has no borrowers");
  const std::size_t p = panel.borrowers.front().covariates.cols();
  const std::size_t q = panel.borrowers.front().re_design.cols();
  if (panel.standardization.size() != p) {
    throw DimensionError("panel standardization must have exactly p entries");
  }
  if (!panel.covariate_names.empty() && panel.covariate_names.size() != p) {
    throw DimensionError("panel covariate_names must have exactly p entries");
  }
  std::set<std::string> ids;
  for (const auto& b : panel.borrowers) {
    if (!ids.insert(b.borrower_id).second) {
      throw ValidationError("duplicate borrower_id: " + b.borrower_id);
    }
    const std::size_t T = b.n_weeks();
    if (T == 0) throw DimensionError("borrower " + b.borrower_id + " has no weeks");
    if (b.counts.size() != T || b.covariates.rows() != T || b.re_design.rows() != T) {
      throw DimensionError("borrower " + b.borrower_id + " has ragged week arrays");
    }
    if (b.covariates.cols() != p) {
      throw DimensionError("borrower " + b.borrower_id + " covariate width differs from panel");
    }
    if (b.re_design.cols() != q) {
      throw DimensionError("borrower " + b.borrower_id + " design width differs from panel");
    }
    for (std::size_t t = 0; t < T; ++t) {
      if (b.weeks[t] != static_cast<int>(t) + 1) {
        throw ValidationError("borrower " + b.borrower_id +
                              " weeks are not contiguous from 1");
      }
      if (b.counts[t] < 0) {
        throw ValidationError("borrower " + b.borrower_id + " has a negative count");
      }
    }
  }
}

PanelDataset assemble_panel(std::vector<RawSeries> raw,
                            std::vector<std::string> raw_covariate_names,
                            bool standardize) {
  if (raw.empty()) throw ValidationError("assemble_panel: no borrowers");
  const std::size_t n_raw = raw_covariate_names.size();
  for (const auto& r : raw) {
    if (r.counts.empty()) {
      throw DimensionError("assemble_panel: borrower " + r.borrower_id + " has no weeks");
    }
    if (r.raw.rows() != r.counts.size() || r.raw.cols() != n_raw) {
      throw DimensionError("assemble_panel: ragged raw covariates for " + r.borrower_id);
    }
  }

  PanelDataset panel;
  panel.covariate_names.reserve(n_raw + 1);
  panel.covariate_names.emplace_back("intercept");
  for (auto& n : raw_covariate_names) panel.covariate_names.push_back(std::move(n));

  panel.standardization.assign(n_raw + 1, Standardization{});
  if (standardize && n_raw > 0) {
    std::vector<double> mean(n_raw, 0.0), m2(n_raw, 0.0);
    std::size_t n = 0;
    for (const auto& r : raw) {
      for (std::size_t t = 0; t < r.raw.rows(); ++t) {
        ++n;
        for (std::size_t c = 0; c < n_raw; ++c) {
          const double x = r.raw(t, c);
          const double d = x - mean[c];
          mean[c] += d / static_cast<double>(n);
          m2[c] += d * (x - mean[c]);
        }
      }
    }
    for (std::size_t c = 0; c < n_raw; ++c) {
      double sd = (n > 1) ? std::sqrt(m2[c] / static_cast<double>(n - 1)) : 0.0;
      if (!(sd > 0.0)) sd = 1.0;  // constant column: center only
      panel.standardization[c + 1] = {mean[c], sd};
    }
  }

  panel.borrowers.reserve(raw.size());
  for (auto& r : raw) {
    BorrowerSeries b;
    b.borrower_id = std::move(r.borrower_id);
    const std::size_t T = r.counts.size();
    b.weeks.resize(T);
    for (std::size_t t = 0; t < T; ++t) b.weeks[t] = static_cast<int>(t) + 1;
    b.counts = std::move(r.counts);
    b.covariates = Matrix(T, n_raw + 1);
    b.re_design = Matrix(T, 1, 1.0);
    for (std::size_t t = 0; t < T; ++t) {
      b.covariates(t, 0) = 1.0;
      for (std::size_t c = 0; c < n_raw; ++c) {
        const auto& s = panel.standardization[c + 1];
        b.covariates(t, c + 1) = (r.raw(t, c) - s.mean) / s.scale;
      }
    }
    b.raw_covariates = std::move(r.raw);
    panel.borrowers.push_back(std::move(b));
  }
  validate_panel(panel);
  return panel;
}

void validate_compatible(const PanelDataset& panel, const ModelParameters& params) {
  const std::size_t N = panel.n_borrowers();
  const std::size_t p = panel.n_covariates();
  const std::size_t q = panel.n_random_effects();
  if (params.beta[0].size() != p || params.beta[1].size() != p) {
    throw DimensionError("beta length does not match panel covariate count");
  }
  if (params.u.size() != N) {
    throw DimensionError("random-effect count does not match borrower count");
  }
  for (const auto& u_i : params.u) {
    if (u_i.size() != q) throw DimensionError("random-effect width does not match design");
  }
  if (params.sigma_u.size() != q) {
    throw DimensionError("sigma_u length does not match random-effect width");
  }
  if (params.trans_logit_dev.size() != N) {
    throw DimensionError("transition-deviation count does not match borrower count");
  }
  for (double s : params.sigma_u) {
    if (!(s > 0.0)) throw DomainError("sigma_u must be strictly positive");
  }
  if (!(params.sigma_v > 0.0)) throw DomainError("sigma_v must be strictly positive");
}

}  // namespace mhmm
