#include "mhmm/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <map>

#include "mhmm/errors.hpp"

namespace mhmm {

namespace {

struct CategoryEntry {
  TransactionCategory cat;
  const char* name;
};

constexpr std::array<CategoryEntry, 8> kCategories = {{
    {TransactionCategory::BasicExpenses, "basic_expenses"},
    {TransactionCategory::DiscretionaryExpenses, "discretionary_expenses"},
    {TransactionCategory::LuxuryExpenses, "luxury_expenses"},
    {TransactionCategory::BasicTransfers, "basic_transfers"},
    {TransactionCategory::DiscretionaryTransfers, "discretionary_transfers"},
    {TransactionCategory::NonRecurrentTransfers, "non_recurrent_transfers"},
    {TransactionCategory::RecurrentIncome, "recurrent_income"},
    {TransactionCategory::NonRecurrentIncome, "non_recurrent_income"},
}};

constexpr std::array<TransactionCategory, 8> kColumnOrder = {
    TransactionCategory::BasicExpenses,       TransactionCategory::DiscretionaryExpenses,
    TransactionCategory::NonRecurrentIncome,  TransactionCategory::BasicTransfers,
    TransactionCategory::DiscretionaryTransfers,
    TransactionCategory::NonRecurrentTransfers,
    TransactionCategory::RecurrentIncome,     TransactionCategory::LuxuryExpenses,
};

}  // namespace

const char* category_name(TransactionCategory c) {
  for (const auto& e : kCategories) {
    if (e.cat == c) return e.name;
  }
  return "?";
}

std::optional<TransactionCategory> parse_category(std::string_view name) {
  for (const auto& e : kCategories) {
    if (name == e.name) return e.cat;
  }
  return std::nullopt;
}

std::span<const TransactionCategory> covariate_category_order() { return kColumnOrder; }

std::vector<std::string> covariate_column_names() {
  std::vector<std::string> names;
  names.reserve(16);
  for (const auto cat : kColumnOrder) {
    const std::string base(category_name(cat));
    names.push_back(base + "_amount");
    names.push_back(base + "_n_transactions");
  }
  return names;
}

std::optional<std::chrono::sys_days> parse_iso_date(std::string_view text) {
  // YYYY-MM-DD only.
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  auto num = [&](std::size_t pos, std::size_t len, int& out) {
    const char* b = text.data() + pos;
    auto [ptr, ec] = std::from_chars(b, b + len, out);
    return ec == std::errc{} && ptr == b + len;
  };
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                        std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd};
}

std::optional<std::chrono::weekday> parse_weekday(std::string_view name) {
  using std::chrono::weekday;
  static const std::pair<const char*, weekday> table[] = {
      {"sunday", std::chrono::Sunday},     {"monday", std::chrono::Monday},
      {"tuesday", std::chrono::Tuesday},   {"wednesday", std::chrono::Wednesday},
      {"thursday", std::chrono::Thursday}, {"friday", std::chrono::Friday},
      {"saturday", std::chrono::Saturday},
  };
  for (const auto& [n, wd] : table) {
    if (name == n) return wd;
  }
  return std::nullopt;
}

namespace {

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Index of the calendar week containing `day`, with weeks starting on
// `anchor`. Only differences between indices are meaningful.
long week_bucket(std::chrono::sys_days day, std::chrono::weekday anchor) {
  const long d = day.time_since_epoch().count();
  // Day 0 (1970-01-01) is a Thursday; shift so multiples of 7 land on anchor.
  const long shift = (static_cast<long>(anchor.c_encoding()) - 4 + 7) % 7;
  return floor_div(d - shift, 7);
}

}  // namespace

PanelDataset aggregate_weekly(std::span<const TransactionRecord> transactions,
                              std::chrono::weekday anchor, bool standardize) {
  if (transactions.empty()) throw ValidationError("aggregate_weekly: no transactions");

  struct BorrowerAgg {
    long first_week = 0, last_week = 0;
    bool seen = false;
    // week bucket -> (count, 16 covariate accumulators)
    std::map<long, std::pair<int, std::array<double, 16>>> weeks;
  };
  // std::map keyed by borrower id: aggregation is order-independent by
  // construction, which makes ingestion permutation-invariant.
  std::map<std::string, BorrowerAgg> agg;

  for (const auto& tx : transactions) {
    auto& b = agg[tx.borrower_id];
    const long w = week_bucket(tx.date, anchor);
    if (!b.seen) {
      b.first_week = b.last_week = w;
      b.seen = true;
    } else {
      b.first_week = std::min(b.first_week, w);
      b.last_week = std::max(b.last_week, w);
    }
    auto& cell = b.weeks[w];
    if (tx.loan_flag) {
      cell.first += 1;
      continue;  // loan disbursements are the response, not covariates
    }
    std::size_t slot = 0;
    for (std::size_t c = 0; c < kColumnOrder.size(); ++c) {
      if (kColumnOrder[c] == tx.category) {
        slot = 2 * c;
        break;
      }
    }
    cell.second[slot] += tx.amount;
    cell.second[slot + 1] += 1.0;
  }

  std::vector<RawSeries> raw;
  raw.reserve(agg.size());
  for (auto& [id, b] : agg) {
    const auto T = static_cast<std::size_t>(b.last_week - b.first_week + 1);
    RawSeries r;
    r.borrower_id = id;
    r.counts.assign(T, 0);
    r.raw = Matrix(T, 16);
    for (const auto& [w, cell] : b.weeks) {
      const auto t = static_cast<std::size_t>(w - b.first_week);
      r.counts[t] = cell.first;
      for (std::size_t c = 0; c < 16; ++c) r.raw(t, c) = cell.second[c];
    }
    raw.push_back(std::move(r));
  }
  return assemble_panel(std::move(raw), covariate_column_names(), standardize);
}

}  // namespace mhmm
