#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mhmm/model.hpp"

namespace mhmm {

enum class TransactionCategory {
  BasicExpenses,
  DiscretionaryExpenses,
  LuxuryExpenses,
  BasicTransfers,
  DiscretionaryTransfers,
  NonRecurrentTransfers,
  RecurrentIncome,
  NonRecurrentIncome,
};

const char* category_name(TransactionCategory c);
std::optional<TransactionCategory> parse_category(std::string_view name);

// Covariate column order of the panel format: amount then n_transactions per
// category, categories in the fixed order used throughout.
std::span<const TransactionCategory> covariate_category_order();
std::vector<std::string> covariate_column_names();  // 16 names

struct TransactionRecord {
  std::string borrower_id;
  std::chrono::sys_days date;
  double amount = 0.0;
  TransactionCategory category = TransactionCategory::BasicExpenses;
  bool loan_flag = false;
};

// Rows dropped during parsing, with 1-based line numbers and reasons.
struct IngestReport {
  std::vector<std::pair<long, std::string>> rejected_lines;
};

// Aggregates transactions into the weekly panel: per borrower, weeks run
// contiguously from the week of the first transaction to the week of the
// last; y is the number of loan-flagged rows per week; the 16 covariates are
// the per-category amount totals and transaction counts of the remaining
// rows (loan-flagged rows are excluded from covariates). Weeks are calendar
// weeks starting on `anchor`; covariates are z-scored panel-wide when
// standardize is set, and an intercept column is prepended.
PanelDataset aggregate_weekly(std::span<const TransactionRecord> transactions,
                              std::chrono::weekday anchor = std::chrono::Monday,
                              bool standardize = true);

std::optional<std::chrono::sys_days> parse_iso_date(std::string_view text);
std::optional<std::chrono::weekday> parse_weekday(std::string_view name);

}  // namespace mhmm
