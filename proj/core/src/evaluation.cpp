#include "mhmm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mhmm/errors.hpp"
#include "mhmm/likelihood.hpp"
#include "mhmm/math.hpp"

namespace mhmm {

std::vector<double> predict_hmm(const BorrowerSeries& series, const ModelParameters& params,
                                std::size_t borrower_index) {
  const ForwardResult fwd = forward(series, params, borrower_index);
  const TransitionMatrix P = transition_matrix(params, borrower_index);
  const std::array<double, 2> pi = initial_distribution(P);
  const std::size_t T = series.n_weeks();

  std::vector<double> pred(T);
  for (std::size_t t = 0; t < T; ++t) {
    std::array<double, 2> w;
    if (t == 0) {
      w = pi;
    } else {
      for (int k = 0; k < 2; ++k) {
        w[k] = fwd.filtered_probs(t - 1, 0) * P(0, k) +
               fwd.filtered_probs(t - 1, 1) * P(1, k);
      }
    }
    const double re = dot(series.re_design.row(t), params.u[borrower_index]);
    double mean = 0.0;
    for (int k = 0; k < 2; ++k) {
      mean += w[k] * std::exp(dot(series.covariates.row(t), params.beta[k]) + re);
    }
    pred[t] = mean;
  }
  return pred;
}

std::vector<double> predict_glmm(const BorrowerSeries& series, const ModelParameters& params,
                                 std::size_t borrower_index) {
  if (borrower_index >= params.u.size()) {
    throw DimensionError("predict_glmm: borrower index out of range");
  }
  const std::size_t T = series.n_weeks();
  std::vector<double> pred(T);
  for (std::size_t t = 0; t < T; ++t) {
    pred[t] = emission_rate(series.covariates.row(t), params.beta[0],
                            series.re_design.row(t), params.u[borrower_index]);
  }
  return pred;
}

MetricsResult weekly_metrics(const PredictionSet& predictions) {
  if (predictions.rows.empty()) throw ValidationError("weekly_metrics: no predictions");

  struct Acc {
    double abs = 0.0, sq = 0.0;
    std::size_t n = 0;
  };
  std::map<int, Acc> by_week;
  for (const auto& r : predictions.rows) {
    if (!(r.predicted >= 0.0) || !std::isfinite(r.predicted)) {
      throw DomainError("weekly_metrics: predictions must be finite and non-negative");
    }
    Acc& a = by_week[r.week];
    const double err = r.predicted - static_cast<double>(r.actual);
    a.abs += std::abs(err);
    a.sq += err * err;
    ++a.n;
  }

  MetricsResult res;
  const int lo = by_week.begin()->first;
  const int hi = by_week.rbegin()->first;
  for (int w = lo; w <= hi; ++w) {
    if (!by_week.contains(w)) res.excluded_weeks.push_back(w);
  }
  double mae_sum = 0.0, mse_sum = 0.0;
  for (const auto& [week, acc] : by_week) {
    WeeklyMetric m;
    m.week = week;
    m.n = acc.n;
    m.mae = acc.abs / static_cast<double>(acc.n);
    m.mse = acc.sq / static_cast<double>(acc.n);
    mae_sum += m.mae;
    mse_sum += m.mse;
    res.weekly.push_back(m);
  }
  res.overall_mae = mae_sum / static_cast<double>(res.weekly.size());
  res.overall_mse = mse_sum / static_cast<double>(res.weekly.size());
  return res;
}

PredictionSet predict_panel(const PanelDataset& panel, const ModelParameters& params,
                            bool hmm) {
  validate_compatible(panel, params);
  PredictionSet set;
  set.model_tag = hmm ? "ME-Poisson-HMM" : "ME-Poisson";
  for (std::size_t i = 0; i < panel.n_borrowers(); ++i) {
    const auto& b = panel.borrowers[i];
    const std::vector<double> pred =
        hmm ? predict_hmm(b, params, i) : predict_glmm(b, params, i);
    for (std::size_t t = 0; t < b.n_weeks(); ++t) {
      set.rows.push_back({b.borrower_id, b.weeks[t], pred[t], b.counts[t]});
    }
  }
  return set;
}

}  // namespace mhmm
