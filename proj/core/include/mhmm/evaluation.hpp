#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mhmm/model.hpp"

namespace mhmm {

struct PredictionRow {
  std::string borrower_id;
  int week = 0;
  double predicted = 0.0;
  int actual = 0;
};

struct PredictionSet {
  std::string model_tag;  // "ME-Poisson" or "ME-Poisson-HMM"
  std::vector<PredictionRow> rows;
};

// Honest one-step-ahead means from the filtered state probabilities:
//   t = 1:  sum_k pi_k * lambda_k(x_1)
//   t >= 2: sum_k [sum_j filtered(t-1, j) * P_jk] * lambda_k(x_t)
// Only data before t enters the prediction for week t.
std::vector<double> predict_hmm(const BorrowerSeries& series, const ModelParameters& params,
                                std::size_t borrower_index);

// Baseline predictor: exp(x_t . beta + d_t . u_i), no state mixture.
std::vector<double> predict_glmm(const BorrowerSeries& series, const ModelParameters& params,
                                 std::size_t borrower_index);

struct WeeklyMetric {
  int week = 0;
  double mae = 0.0;
  double mse = 0.0;
  std::size_t n = 0;
};

struct MetricsResult {
  std::vector<WeeklyMetric> weekly;
  double overall_mae = 0.0;  // unweighted mean of weekly values
  double overall_mse = 0.0;
  std::vector<int> excluded_weeks;  // weeks in range with no predictions
};

MetricsResult weekly_metrics(const PredictionSet& predictions);

// Predictions for every borrower-week of the panel under one model.
PredictionSet predict_panel(const PanelDataset& panel, const ModelParameters& params,
                            bool hmm);

}  // namespace mhmm
