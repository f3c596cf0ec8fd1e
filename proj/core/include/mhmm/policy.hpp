#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mhmm/decoding.hpp"

namespace mhmm {

struct PolicyConfig {
  int window = 12;  // consecutive vulnerable weeks that constitute a default
};

enum class Classification { NonDefault, DefaultRecovered, DefaultNonRecovered };

const char* classification_name(Classification c);

struct BorrowerOutcome {
  std::string borrower_id;
  Classification classification = Classification::NonDefault;
  std::optional<int> default_week;  // week the window completed; set iff defaulted

  friend bool operator==(const BorrowerOutcome&, const BorrowerOutcome&) = default;
};

// Week (1-based) at which the window-th consecutive state-2 week completes,
// or nullopt if no such run exists.
std::optional<int> detect_default(std::span<const int> states, const PolicyConfig& config);

// NonDefault if no default; DefaultRecovered if any state-1 week follows the
// default week; DefaultNonRecovered otherwise.
BorrowerOutcome classify(const StatePath& path, const PolicyConfig& config);

struct DistressPoint {
  int week = 0;
  double proportion = 0.0;  // distressed / active, in [0,1]
  int n_active = 0;
  int n_distressed = 0;
};

// Per-week share of active borrowers whose default window has completed at or
// before that week and who have not yet returned to state 1. Borrowers that
// never recover stay distressed through their last observed week; proportions
// are over borrowers observed at each week.
std::vector<DistressPoint> distress_series(std::span<const StatePath> paths,
                                           const PolicyConfig& config);

struct CohortFlow {
  int total = 0;
  int non_default = 0;
  int defaulted = 0;  // recovered + non_recovered
  int recovered = 0;
  int non_recovered = 0;
};

CohortFlow cohort_flow(std::span<const BorrowerOutcome> outcomes);

struct PolicyReport {
  PolicyConfig config;
  std::vector<BorrowerOutcome> outcomes;
  std::vector<DistressPoint> series;
  CohortFlow flow;
  double terminal_distress = 0.0;      // last week's proportion
  double time_average_distress = 0.0;  // unweighted mean over weeks
};

PolicyReport run_policy(std::span<const StatePath> paths, const PolicyConfig& config);

}  // namespace mhmm
