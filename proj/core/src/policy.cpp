#include "mhmm/policy.hpp"

#include <algorithm>

#include "mhmm/errors.hpp"

namespace mhmm {

const char* classification_name(Classification c) {
  switch (c) {
    case Classification::NonDefault: return "NonDefault";
    case Classification::DefaultRecovered: return "DefaultRecovered";
    case Classification::DefaultNonRecovered: return "DefaultNonRecovered";
  }
  return "?";
}

namespace {

void check_states(std::span<const int> states) {
  if (states.empty()) throw ValidationError("policy: empty state sequence");
  for (int s : states) {
    if (s != 1 && s != 2) {
      throw ValidationError("policy: state values must be 1 or 2, got " + std::to_string(s));
    }
  }
}

// First week a borrower is back in state 1 strictly after default_week, or 0.
int recovery_week(std::span<const int> states, int default_week) {
  for (std::size_t t = static_cast<std::size_t>(default_week); t < states.size(); ++t) {
    if (states[t] == 1) return static_cast<int>(t) + 1;
  }
  return 0;
}

}  // namespace

std::optional<int> detect_default(std::span<const int> states, const PolicyConfig& config) {
  check_states(states);
  if (config.window < 1) throw ValidationError("policy: window must be >= 1");
  int streak = 0;
  for (std::size_t t = 0; t < states.size(); ++t) {
    streak = (states[t] == 2) ? streak + 1 : 0;
    if (streak == config.window) return static_cast<int>(t) + 1;
  }
  return std::nullopt;
}

BorrowerOutcome classify(const StatePath& path, const PolicyConfig& config) {
  BorrowerOutcome out;
  out.borrower_id = path.borrower_id;
  const auto dw = detect_default(path.states, config);
  if (!dw) {
    out.classification = Classification::NonDefault;
    return out;
  }
  out.default_week = *dw;
  out.classification = recovery_week(path.states, *dw) > 0
                           ? Classification::DefaultRecovered
                           : Classification::DefaultNonRecovered;
  return out;
}

std::vector<DistressPoint> distress_series(std::span<const StatePath> paths,
                                           const PolicyConfig& config) {
  if (paths.empty()) throw ValidationError("distress_series: no paths");
  int max_week = 0;
  for (const auto& p : paths) {
    max_week = std::max(max_week, static_cast<int>(p.states.size()));
  }

  // Per borrower: default week (0 = never) and recovery week (0 = never).
  std::vector<std::pair<int, int>> spans;
  spans.reserve(paths.size());
  for (const auto& p : paths) {
    const auto dw = detect_default(p.states, config);
    if (!dw) {
      spans.emplace_back(0, 0);
    } else {
      spans.emplace_back(*dw, recovery_week(p.states, *dw));
    }
  }

  std::vector<DistressPoint> series(max_week);
  for (int w = 1; w <= max_week; ++w) {
    DistressPoint& pt = series[w - 1];
    pt.week = w;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      if (static_cast<int>(paths[i].states.size()) < w) continue;
      ++pt.n_active;
      const auto [dw, rw] = spans[i];
      if (dw != 0 && dw <= w && (rw == 0 || w < rw)) ++pt.n_distressed;
    }
    pt.proportion = static_cast<double>(pt.n_distressed) / static_cast<double>(pt.n_active);
  }
  return series;
}

CohortFlow cohort_flow(std::span<const BorrowerOutcome> outcomes) {
  if (outcomes.empty()) throw ValidationError("cohort_flow: no outcomes");
  CohortFlow flow;
  flow.total = static_cast<int>(outcomes.size());
  for (const auto& o : outcomes) {
    switch (o.classification) {
      case Classification::NonDefault: ++flow.non_default; break;
      case Classification::DefaultRecovered: ++flow.recovered; break;
      case Classification::DefaultNonRecovered: ++flow.non_recovered; break;
    }
  }
  flow.defaulted = flow.recovered + flow.non_recovered;
  return flow;
}

PolicyReport run_policy(std::span<const StatePath> paths, const PolicyConfig& config) {
  PolicyReport report;
  report.config = config;
  report.outcomes.reserve(paths.size());
  for (const auto& p : paths) report.outcomes.push_back(classify(p, config));
  report.series = distress_series(paths, config);
  report.flow = cohort_flow(report.outcomes);
  report.terminal_distress = report.series.back().proportion;
  double acc = 0.0;
  for (const auto& pt : report.series) acc += pt.proportion;
  report.time_average_distress = acc / static_cast<double>(report.series.size());
  return report;
}

}  // namespace mhmm
