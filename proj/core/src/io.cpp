#include "mhmm/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mhmm/errors.hpp"

namespace mhmm::io {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const char* b = s.data();
  auto [ptr, ec] = std::from_chars(b, b + s.size(), v);
  if (ec != std::errc{} || ptr != b + s.size()) return std::nullopt;
  return v;
}

std::optional<long> parse_long(std::string_view s) {
  long v = 0;
  const char* b = s.data();
  auto [ptr, ec] = std::from_chars(b, b + s.size(), v);
  if (ec != std::errc{} || ptr != b + s.size()) return std::nullopt;
  return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

void check_no_commas(const std::string& name) {
  if (name.find(',') != std::string::npos) {
    throw ValidationError("CSV field contains a comma: " + name);
  }
}

ordered_json json_double_array(std::span<const double> xs) {
  ordered_json arr = ordered_json::array();
  for (double x : xs) arr.push_back(x);
  return arr;
}

}  // namespace

std::string format_double(double x) {
  std::array<char, 64> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Panel CSV
// ---------------------------------------------------------------------------

void write_panel_csv(const std::filesystem::path& path, const PanelDataset& panel) {
  validate_panel(panel);
  std::ostringstream out;
  out << "borrower_id,week,count";
  for (std::size_t c = 1; c < panel.covariate_names.size(); ++c) {
    check_no_commas(panel.covariate_names[c]);
    out << ',' << panel.covariate_names[c];
  }
  out << '\n';
  for (const auto& b : panel.borrowers) {
    if (b.raw_covariates.rows() != b.n_weeks()) {
      throw ValidationError("write_panel_csv: panel lacks raw covariates for " +
                            b.borrower_id);
    }
    check_no_commas(b.borrower_id);
    for (std::size_t t = 0; t < b.n_weeks(); ++t) {
      out << b.borrower_id << ',' << b.weeks[t] << ',' << b.counts[t];
      for (std::size_t c = 0; c < b.raw_covariates.cols(); ++c) {
        out << ',' << format_double(b.raw_covariates(t, c));
      }
      out << '\n';
    }
  }
  write_text_atomic(path, out.str());
}

PanelDataset read_panel_csv(const std::filesystem::path& path, bool standardize) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("panel csv: empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "borrower_id" || header[1] != "week" ||
      header[2] != "count") {
    throw ValidationError("panel csv: bad header");
  }
  std::vector<std::string> names(header.begin() + 3, header.end());
  const std::size_t n_cov = names.size();

  std::vector<RawSeries> raw;
  std::string cur_id;
  std::vector<int> cur_counts;
  std::vector<double> cur_values;  // row-major T x n_cov
  auto flush = [&]() {
    if (cur_id.empty()) return;
    RawSeries r;
    r.borrower_id = cur_id;
    r.raw = Matrix(cur_counts.size(), n_cov);
    for (std::size_t t = 0; t < cur_counts.size(); ++t) {
      for (std::size_t c = 0; c < n_cov; ++c) r.raw(t, c) = cur_values[t * n_cov + c];
    }
    r.counts = std::move(cur_counts);
    raw.push_back(std::move(r));
    cur_counts.clear();
    cur_values.clear();
  };

  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3 + n_cov) {
      throw ValidationError("panel csv line " + std::to_string(lineno) +
                            ": wrong field count");
    }
    const auto week = parse_long(fields[1]);
    const auto count = parse_long(fields[2]);
    if (!week || !count || *count < 0) {
      throw ValidationError("panel csv line " + std::to_string(lineno) +
                            ": bad week or count");
    }
    if (fields[0] != cur_id) {
      flush();
      cur_id = fields[0];
    }
    if (*week != static_cast<long>(cur_counts.size()) + 1) {
      throw ValidationError("panel csv line " + std::to_string(lineno) +
                            ": weeks must be contiguous from 1 per borrower");
    }
    cur_counts.push_back(static_cast<int>(*count));
    for (std::size_t c = 0; c < n_cov; ++c) {
      const auto v = parse_double(fields[3 + c]);
      if (!v) {
        throw ValidationError("panel csv line " + std::to_string(lineno) +
                              ": bad covariate value");
      }
      cur_values.push_back(*v);
    }
  }
  flush();
  if (raw.empty()) throw ValidationError("panel csv: no data rows");
  return assemble_panel(std::move(raw), std::move(names), standardize);
}

// ---------------------------------------------------------------------------
// States CSV
// ---------------------------------------------------------------------------

void write_states_csv(const std::filesystem::path& path, std::span<const StatePath> paths,
                      const PanelDataset& panel) {
  if (paths.size() != panel.n_borrowers()) {
    throw DimensionError("write_states_csv: path count does not match panel");
  }
  std::ostringstream out;
  out << "borrower_id,week,state,count\n";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& b = panel.borrowers[i];
    const auto& p = paths[i];
    if (p.states.size() != b.n_weeks()) {
      throw DimensionError("write_states_csv: path length mismatch for " + b.borrower_id);
    }
    check_no_commas(p.borrower_id);
    for (std::size_t t = 0; t < p.states.size(); ++t) {
      out << p.borrower_id << ',' << b.weeks[t] << ',' << p.states[t] << ','
          << b.counts[t] << '\n';
    }
  }
  write_text_atomic(path, out.str());
}

std::vector<StatePath> read_states_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("states csv: empty file");
  if (split_csv_line(line) !=
      std::vector<std::string>{"borrower_id", "week", "state", "count"}) {
    throw ValidationError("states csv: bad header");
  }
  std::vector<StatePath> paths;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw ValidationError("states csv line " + std::to_string(lineno) +
                            ": wrong field count");
    }
    const auto week = parse_long(fields[1]);
    const auto state = parse_long(fields[2]);
    if (!week || !state || (*state != 1 && *state != 2)) {
      throw ValidationError("states csv line " + std::to_string(lineno) +
                            ": bad week or state");
    }
    if (paths.empty() || paths.back().borrower_id != fields[0]) {
      paths.push_back(StatePath{fields[0], {}, 0.0});
    }
    if (*week != static_cast<long>(paths.back().states.size()) + 1) {
      throw ValidationError("states csv line " + std::to_string(lineno) +
                            ": weeks must be contiguous from 1 per borrower");
    }
    paths.back().states.push_back(static_cast<int>(*state));
  }
  if (paths.empty()) throw ValidationError("states csv: no data rows");
  return paths;
}

// ---------------------------------------------------------------------------
// Samples CSV
// ---------------------------------------------------------------------------

void write_samples_csv(const std::filesystem::path& path, const PosteriorSamples& samples) {
  const auto views = parameter_views(samples.model, samples.n_borrowers,
                                     samples.n_covariates, samples.n_random_effects);
  std::ostringstream out;
  out << "chain,iteration,parameter_name,value\n";
  for (std::size_t d = 0; d < samples.draws.size(); ++d) {
    for (const auto& view : views) {
      out << samples.chain_ids[d] << ',' << samples.iterations[d] << ',' << view.name << ','
          << format_double(view.get(samples.draws[d])) << '\n';
    }
  }
  write_text_atomic(path, out.str());
}

namespace {

// Shape discovery from parameter names on a first pass; slot assignment on a
// second. Names follow the fixed grammar produced by parameter_views.
struct NameInfo {
  std::string base;
  std::vector<long> indices;  // 1-based
};

NameInfo parse_name(const std::string& name, long lineno) {
  NameInfo info;
  std::size_t pos = name.find('[');
  info.base = name.substr(0, pos);
  while (pos != std::string::npos && pos < name.size()) {
    const std::size_t close = name.find(']', pos);
    if (close == std::string::npos) {
      throw ValidationError("samples csv line " + std::to_string(lineno) +
                            ": malformed parameter name " + name);
    }
    const auto idx = parse_long(std::string_view(name).substr(pos + 1, close - pos - 1));
    if (!idx || *idx < 1) {
      throw ValidationError("samples csv line " + std::to_string(lineno) +
                            ": bad index in " + name);
    }
    info.indices.push_back(*idx);
    pos = name.find('[', close);
  }
  return info;
}

}  // namespace

PosteriorSamples read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("samples csv: empty file");
  if (split_csv_line(line) !=
      std::vector<std::string>{"chain", "iteration", "parameter_name", "value"}) {
    throw ValidationError("samples csv: bad header");
  }

  struct Row {
    int chain;
    int iteration;
    std::string name;
    double value;
  };
  std::vector<Row> rows;
  long lineno = 1;
  std::size_t n_borrowers = 0, n_cov = 0, n_re = 0;
  bool has_mu = false, multi_re = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw ValidationError("samples csv line " + std::to_string(lineno) +
                            ": wrong field count");
    }
    const auto chain = parse_long(fields[0]);
    const auto iter = parse_long(fields[1]);
    const auto value = parse_double(fields[3]);
    if (!chain || !iter || !value) {
      throw ValidationError("samples csv line " + std::to_string(lineno) + ": bad row");
    }
    const NameInfo info = parse_name(fields[2], lineno);
    if (info.base == "beta" && info.indices.size() == 2) {
      n_cov = std::max(n_cov, static_cast<std::size_t>(info.indices[1]));
    } else if (info.base == "u") {
      n_borrowers = std::max(n_borrowers, static_cast<std::size_t>(info.indices.at(0)));
      if (info.indices.size() == 2) {
        multi_re = true;
        n_re = std::max(n_re, static_cast<std::size_t>(info.indices[1]));
      }
    } else if (info.base == "mu") {
      has_mu = true;
    } else if (info.base == "sigma_u" && info.indices.size() == 1) {
      multi_re = true;
      n_re = std::max(n_re, static_cast<std::size_t>(info.indices[0]));
    }
    rows.push_back(Row{static_cast<int>(*chain), static_cast<int>(*iter), fields[2], *value});
  }
  if (rows.empty()) throw ValidationError("samples csv: no data rows");
  if (!multi_re) n_re = 1;

  PosteriorSamples samples;
  samples.model = has_mu ? ModelKind::MePoissonHmm : ModelKind::MePoisson;
  samples.n_borrowers = n_borrowers;
  samples.n_covariates = n_cov;
  samples.n_random_effects = n_re;

  const auto views = parameter_views(samples.model, n_borrowers, n_cov, n_re);
  std::map<std::string, std::size_t> view_index;
  for (std::size_t v = 0; v < views.size(); ++v) view_index[views[v].name] = v;

  ModelParameters shape;
  shape.beta[0].assign(n_cov, 0.0);
  shape.beta[1].assign(n_cov, 0.0);
  shape.u.assign(n_borrowers, std::vector<double>(n_re, 0.0));
  shape.sigma_u.assign(n_re, 1.0);
  shape.trans_logit_dev.assign(n_borrowers, {0.0, 0.0});

  long current_key_chain = -1, current_key_iter = -1;
  std::size_t filled = 0;
  for (const auto& row : rows) {
    if (row.chain != current_key_chain || row.iteration != current_key_iter) {
      if (current_key_chain >= 0 && filled != views.size()) {
        throw ValidationError("samples csv: incomplete draw before chain " +
                              std::to_string(row.chain) + " iteration " +
                              std::to_string(row.iteration));
      }
      samples.draws.push_back(shape);
      samples.chain_ids.push_back(row.chain);
      samples.iterations.push_back(row.iteration);
      current_key_chain = row.chain;
      current_key_iter = row.iteration;
      filled = 0;
    }
    const auto it = view_index.find(row.name);
    if (it == view_index.end()) {
      throw ValidationError("samples csv: unknown parameter " + row.name);
    }
    views[it->second].set(samples.draws.back(), row.value);
    ++filled;
  }
  if (filled != views.size()) {
    throw ValidationError("samples csv: final draw is incomplete");
  }
  if (samples.model == ModelKind::MePoisson) {
    for (auto& d : samples.draws) d.beta[1] = d.beta[0];
  }
  samples.log_posterior_trace.assign(samples.draws.size(), 0.0);
  return samples;
}

// ---------------------------------------------------------------------------
// Metrics CSV
// ---------------------------------------------------------------------------

void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const std::pair<std::string, MetricsResult>> metrics) {
  std::ostringstream out;
  out << "week,model,mae,mse\n";
  for (const auto& [tag, result] : metrics) {
    for (const auto& w : result.weekly) {
      out << w.week << ',' << tag << ',' << format_double(w.mae) << ','
          << format_double(w.mse) << '\n';
    }
  }
  write_text_atomic(path, out.str());
}

// ---------------------------------------------------------------------------
// Transactions CSV
// ---------------------------------------------------------------------------

std::vector<TransactionRecord> read_transactions_csv(const std::filesystem::path& path,
                                                     IngestReport* report) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("transactions csv: empty file");
  if (split_csv_line(line) !=
      std::vector<std::string>{"borrower_id", "date", "amount", "category", "loan_flag"}) {
    throw ValidationError("transactions csv: bad header");
  }
  std::vector<TransactionRecord> records;
  long lineno = 1;
  auto reject = [&](long n, std::string reason) {
    if (report) report->rejected_lines.emplace_back(n, std::move(reason));
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) {
      reject(lineno, "wrong field count");
      continue;
    }
    const auto date = parse_iso_date(fields[1]);
    if (!date) {
      reject(lineno, "unparseable date: " + fields[1]);
      continue;
    }
    const auto amount = parse_double(fields[2]);
    if (!amount || !std::isfinite(*amount)) {
      reject(lineno, "bad amount: " + fields[2]);
      continue;
    }
    const auto category = parse_category(fields[3]);
    if (!category) {
      reject(lineno, "unknown category: " + fields[3]);
      continue;
    }
    if (fields[4] != "0" && fields[4] != "1") {
      reject(lineno, "loan_flag must be 0 or 1");
      continue;
    }
    records.push_back(TransactionRecord{fields[0], *date, *amount, *category,
                                        fields[4] == "1"});
  }
  if (records.empty()) throw ValidationError("transactions csv: no valid rows");
  return records;
}

void write_transactions_csv(const std::filesystem::path& path,
                            std::span<const TransactionRecord> transactions) {
  std::ostringstream out;
  out << "borrower_id,date,amount,category,loan_flag\n";
  for (const auto& tx : transactions) {
    check_no_commas(tx.borrower_id);
    const std::chrono::year_month_day ymd{tx.date};
    char date[16];
    std::snprintf(date, sizeof(date), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    out << tx.borrower_id << ',' << date << ',' << format_double(tx.amount) << ','
        << category_name(tx.category) << ',' << (tx.loan_flag ? 1 : 0) << '\n';
  }
  write_text_atomic(path, out.str());
}

// ---------------------------------------------------------------------------
// JSON artifacts
// ---------------------------------------------------------------------------

void write_truth_json(const std::filesystem::path& path, const SimulationTruth& truth) {
  ordered_json j;
  j["seed"] = truth.seed;
  ordered_json params;
  params["beta1"] = json_double_array(truth.params.beta[0]);
  params["beta2"] = json_double_array(truth.params.beta[1]);
  params["sigma_u"] = json_double_array(truth.params.sigma_u);
  params["mu"] = json_double_array(truth.params.trans_logit_mean);
  params["sigma_v"] = truth.params.sigma_v;
  ordered_json u = ordered_json::array();
  for (const auto& u_i : truth.params.u) u.push_back(json_double_array(u_i));
  params["u"] = u;
  ordered_json v = ordered_json::array();
  for (const auto& v_i : truth.params.trans_logit_dev) v.push_back(json_double_array(v_i));
  params["v"] = v;
  j["params"] = params;
  ordered_json paths = ordered_json::array();
  for (const auto& p : truth.paths) {
    ordered_json e;
    e["borrower_id"] = p.borrower_id;
    e["states"] = p.states;
    paths.push_back(e);
  }
  j["state_paths"] = paths;
  write_text_atomic(path, j.dump(2) + "\n");
}

namespace {

ordered_json summary_to_json(const PosteriorSummary& summary, ModelKind kind,
                             std::size_t n_draws) {
  ordered_json j;
  j["model"] = model_tag(kind);
  j["n_draws"] = n_draws;
  ordered_json params = ordered_json::array();
  for (const auto& p : summary.parameters) {
    ordered_json e;
    e["name"] = p.name;
    e["median"] = p.median;
    e["q75"] = {p.q75_lo, p.q75_hi};
    e["q90"] = {p.q90_lo, p.q90_hi};
    params.push_back(e);
  }
  j["parameters"] = params;
  ordered_json diags = ordered_json::array();
  for (const auto& d : summary.beta_diagnostics) {
    ordered_json e;
    e["name"] = d.name;
    e["r_hat"] = d.r_hat;
    e["ess"] = d.ess;
    diags.push_back(e);
  }
  j["beta_diagnostics"] = diags;
  return j;
}

ordered_json policy_to_json(const PolicyReport& report) {
  ordered_json j;
  j["window"] = report.config.window;
  ordered_json outcomes = ordered_json::array();
  for (const auto& o : report.outcomes) {
    ordered_json e;
    e["borrower_id"] = o.borrower_id;
    e["classification"] = classification_name(o.classification);
    if (o.default_week) {
      e["default_week"] = *o.default_week;
    } else {
      e["default_week"] = nullptr;
    }
    outcomes.push_back(e);
  }
  j["outcomes"] = outcomes;
  ordered_json flow;
  flow["total"] = report.flow.total;
  flow["non_default"] = report.flow.non_default;
  flow["default"] = report.flow.defaulted;
  flow["recovered"] = report.flow.recovered;
  flow["non_recovered"] = report.flow.non_recovered;
  j["flow"] = flow;
  ordered_json series = ordered_json::array();
  for (const auto& pt : report.series) {
    ordered_json e;
    e["week"] = pt.week;
    e["proportion"] = pt.proportion;
    e["n_active"] = pt.n_active;
    e["n_distressed"] = pt.n_distressed;
    series.push_back(e);
  }
  j["distress_series"] = series;
  ordered_json summary;
  summary["terminal"] = report.terminal_distress;
  summary["time_average"] = report.time_average_distress;
  j["distress_summary"] = summary;
  return j;
}

ordered_json metrics_to_json(const std::pair<std::string, MetricsResult>& entry) {
  const auto& [tag, m] = entry;
  ordered_json j;
  j["model"] = tag;
  ordered_json weekly = ordered_json::array();
  for (const auto& w : m.weekly) {
    ordered_json e;
    e["week"] = w.week;
    e["mae"] = w.mae;
    e["mse"] = w.mse;
    e["n"] = w.n;
    weekly.push_back(e);
  }
  j["weekly"] = weekly;
  j["overall_mae"] = m.overall_mae;
  j["overall_mse"] = m.overall_mse;
  j["excluded_weeks"] = m.excluded_weeks;
  return j;
}

}  // namespace

void write_summary_json(const std::filesystem::path& path, const PosteriorSummary& summary,
                        ModelKind kind, std::size_t n_draws) {
  write_text_atomic(path, summary_to_json(summary, kind, n_draws).dump(2) + "\n");
}

void write_policy_json(const std::filesystem::path& path, const PolicyReport& report) {
  write_text_atomic(path, policy_to_json(report).dump(2) + "\n");
}

void write_report_json(const std::filesystem::path& path, const ReportBundle& bundle) {
  if (bundle.summary == nullptr || bundle.policy == nullptr) {
    throw ValidationError("report: summary and policy sections are required");
  }
  ordered_json j;
  j["summary"] = summary_to_json(*bundle.summary, ModelKind::MePoissonHmm, 0)["parameters"];
  ordered_json diags = ordered_json::array();
  for (const auto& d : bundle.summary->beta_diagnostics) {
    ordered_json e;
    e["name"] = d.name;
    e["r_hat"] = d.r_hat;
    e["ess"] = d.ess;
    diags.push_back(e);
  }
  j["beta_diagnostics"] = diags;
  if (bundle.baseline_summary != nullptr) {
    j["baseline_summary"] =
        summary_to_json(*bundle.baseline_summary, ModelKind::MePoisson, 0)["parameters"];
  }
  const ordered_json policy = policy_to_json(*bundle.policy);
  j["flow"] = policy["flow"];
  j["distress_series"] = policy["distress_series"];
  j["distress_summary"] = policy["distress_summary"];
  ordered_json metrics = ordered_json::array();
  for (const auto& entry : bundle.metrics) metrics.push_back(metrics_to_json(entry));
  j["metrics"] = metrics;
  write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace mhmm::io
