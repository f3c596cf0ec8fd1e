#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mhmm/inference.hpp"
#include "mhmm/matrix.hpp"
#include "mhmm/model.hpp"

namespace mhmm {

// Most probable hidden-state sequence for one borrower. States are 1
// (stable) and 2 (vulnerable); log_joint is log p(y, z) at the decoded path.
struct StatePath {
  std::string borrower_id;
  std::vector<int> states;
  double log_joint = 0.0;

  friend bool operator==(const StatePath&, const StatePath&) = default;
};

// Log-space Viterbi. Ties break toward state 1 at every comparison, so the
// decoded path is deterministic (reverse-lexicographically smallest among
// maximizers).
StatePath viterbi(const BorrowerSeries& series, const ModelParameters& params,
                  std::size_t borrower_index);

// Smoothed state probabilities p(Z_t = k | y_1..T); rows sum to 1.
Matrix forward_backward(const BorrowerSeries& series, const ModelParameters& params,
                        std::size_t borrower_index);

// Viterbi per borrower at the parameter-wise posterior median of samples.
std::vector<StatePath> decode_panel(const PanelDataset& panel,
                                    const PosteriorSamples& samples);

}  // namespace mhmm
