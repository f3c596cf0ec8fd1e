#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mhmm/decoding.hpp"
#include "mhmm/evaluation.hpp"
#include "mhmm/inference.hpp"
#include "mhmm/ingest.hpp"
#include "mhmm/model.hpp"
#include "mhmm/policy.hpp"
#include "mhmm/simulate.hpp"

namespace mhmm::io {

// Shortest round-trip decimal form; parse(format(x)) == x exactly.
std::string format_double(double x);

// write-temp-then-rename so partially written artifacts never appear.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

// Panel CSV: borrower_id,week,count,<covariate columns>. Values are the raw
// (pre-standardization) covariates; the reader re-standardizes.
void write_panel_csv(const std::filesystem::path& path, const PanelDataset& panel);
PanelDataset read_panel_csv(const std::filesystem::path& path, bool standardize = true);

// Decoded paths CSV: borrower_id,week,state,count.
void write_states_csv(const std::filesystem::path& path, std::span<const StatePath> paths,
                      const PanelDataset& panel);
std::vector<StatePath> read_states_csv(const std::filesystem::path& path);

// Posterior draws, long format: chain,iteration,parameter_name,value.
void write_samples_csv(const std::filesystem::path& path, const PosteriorSamples& samples);
PosteriorSamples read_samples_csv(const std::filesystem::path& path);

// Weekly metrics CSV: week,model,mae,mse (one block per model).
void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const std::pair<std::string, MetricsResult>> metrics);

// Transactions CSV: borrower_id,date,amount,category,loan_flag. Malformed
// rows are rejected individually and reported with their line numbers.
std::vector<TransactionRecord> read_transactions_csv(const std::filesystem::path& path,
                                                     IngestReport* report = nullptr);
void write_transactions_csv(const std::filesystem::path& path,
                            std::span<const TransactionRecord> transactions);

// JSON artifacts.
void write_truth_json(const std::filesystem::path& path, const SimulationTruth& truth);
void write_summary_json(const std::filesystem::path& path, const PosteriorSummary& summary,
                        ModelKind kind, std::size_t n_draws);
void write_policy_json(const std::filesystem::path& path, const PolicyReport& report);

struct ReportBundle {
  const PosteriorSummary* summary = nullptr;            // required
  const PosteriorSummary* baseline_summary = nullptr;   // optional
  const PolicyReport* policy = nullptr;                 // required
  std::span<const std::pair<std::string, MetricsResult>> metrics;
};
void write_report_json(const std::filesystem::path& path, const ReportBundle& bundle);

}  // namespace mhmm::io
