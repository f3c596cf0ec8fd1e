#include "mhmm/config.hpp"

#include <charconv>
#include <fstream>

#include "mhmm/errors.hpp"

namespace mhmm {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const char* b = value.data();
  auto [ptr, ec] = std::from_chars(b, b + value.size(), v);
  if (ec != std::errc{} || ptr != b + value.size()) {
    throw ValidationError("config: " + key + " expects a number, got '" + value + "'");
  }
  return v;
}

long to_long(const std::string& key, const std::string& value) {
  long v = 0;
  const char* b = value.data();
  auto [ptr, ec] = std::from_chars(b, b + value.size(), v);
  if (ec != std::errc{} || ptr != b + value.size()) {
    throw ValidationError("config: " + key + " expects an integer, got '" + value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ValidationError("config: " + key + " expects true/false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::string cur;
  for (char ch : value) {
    if (ch == ',') {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  items.push_back(trim(cur));
  return items;
}

std::vector<double> to_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(to_double(key, item));
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::map<std::string, std::string> entries;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected key = value");
    }
    entries[trim(trimmed.substr(0, eq))] = trim(trimmed.substr(eq + 1));
  }
  return entries;
}

void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value) {
  if (key == "paths.input") config.input = value;
  else if (key == "paths.output_dir") config.output_dir = value;
  else if (key == "model.beta_prior_scale") config.prior.beta_prior_scale = to_double(key, value);
  else if (key == "model.trans_mean_prior_scale") config.prior.trans_mean_prior_scale = to_double(key, value);
  else if (key == "model.sigma_half_normal_scale") config.prior.sigma_half_normal_scale = to_double(key, value);
  else if (key == "mcmc.chains") config.mcmc.chains = static_cast<int>(to_long(key, value));
  else if (key == "mcmc.iterations") config.mcmc.iterations = static_cast<int>(to_long(key, value));
  else if (key == "mcmc.burn_in") config.mcmc.burn_in = static_cast<int>(to_long(key, value));
  else if (key == "mcmc.thinning") config.mcmc.thinning = static_cast<int>(to_long(key, value));
  else if (key == "mcmc.seed") config.mcmc.seed = static_cast<std::uint64_t>(to_long(key, value));
  else if (key == "mcmc.adapt_window") config.mcmc.adapt_window = static_cast<int>(to_long(key, value));
  else if (key == "mcmc.target_accept") config.mcmc.target_accept = to_double(key, value);
  else if (key == "mcmc.threads") config.mcmc.threads = static_cast<int>(to_long(key, value));
  else if (key == "policy.window") config.policy.window = static_cast<int>(to_long(key, value));
  else if (key == "ingest.standardize") config.standardize = to_bool(key, value);
  else if (key == "ingest.week_anchor") config.week_anchor = value;
  else if (key == "sim.fixture") config.sim.fixture = value;
  else if (key == "sim.n_borrowers") config.sim.n_borrowers = static_cast<int>(to_long(key, value));
  else if (key == "sim.weeks_min") config.sim.weeks_min = static_cast<int>(to_long(key, value));
  else if (key == "sim.weeks_max") config.sim.weeks_max = static_cast<int>(to_long(key, value));
  else if (key == "sim.beta1") config.sim.beta1 = to_doubles(key, value);
  else if (key == "sim.beta2") config.sim.beta2 = to_doubles(key, value);
  else if (key == "sim.sigma_u") config.sim.sigma_u = to_double(key, value);
  else if (key == "sim.mu1") config.sim.mu1 = to_double(key, value);
  else if (key == "sim.mu2") config.sim.mu2 = to_double(key, value);
  else if (key == "sim.sigma_v") config.sim.sigma_v = to_double(key, value);
  else if (key == "sim.covariate_names") config.sim.covariate_names = split_list(value);
  else if (key == "sim.covariate_means") config.sim.covariate_means = to_doubles(key, value);
  else if (key == "sim.covariate_sds") config.sim.covariate_sds = to_doubles(key, value);
  else if (key == "sim.clamp_nonnegative") config.sim.clamp_nonnegative = to_bool(key, value);
  else throw ValidationError("config: unknown key '" + key + "'");
}

std::vector<std::string> config_keys() {
  return {
      "paths.input",        "paths.output_dir",
      "model.beta_prior_scale", "model.trans_mean_prior_scale",
      "model.sigma_half_normal_scale",
      "mcmc.chains",        "mcmc.iterations",  "mcmc.burn_in",  "mcmc.thinning",
      "mcmc.seed",          "mcmc.adapt_window", "mcmc.target_accept", "mcmc.threads",
      "policy.window",
      "ingest.standardize", "ingest.week_anchor",
      "sim.fixture",        "sim.n_borrowers",  "sim.weeks_min", "sim.weeks_max",
      "sim.beta1",          "sim.beta2",        "sim.sigma_u",   "sim.mu1",
      "sim.mu2",            "sim.sigma_v",      "sim.covariate_names",
      "sim.covariate_means", "sim.covariate_sds", "sim.clamp_nonnegative",
  };
}

SimulationConfig build_simulation_config(const SimBlock& sim, std::uint64_t seed) {
  SimulationConfig cfg;
  if (sim.fixture == "acceptance") {
    cfg = acceptance_config();
  } else if (sim.fixture == "transactions" || sim.fixture.empty()) {
    cfg = default_transaction_config();
  } else {
    throw ValidationError("sim.fixture must be 'acceptance' or 'transactions'");
  }
  cfg.seed = seed;
  if (sim.n_borrowers) cfg.n_borrowers = *sim.n_borrowers;
  if (sim.weeks_min) cfg.weeks_min = *sim.weeks_min;
  if (sim.weeks_max) cfg.weeks_max = *sim.weeks_max;
  if (sim.sigma_u) cfg.true_params.sigma_u = {*sim.sigma_u};
  if (sim.mu1) cfg.true_params.trans_logit_mean[0] = *sim.mu1;
  if (sim.mu2) cfg.true_params.trans_logit_mean[1] = *sim.mu2;
  if (sim.sigma_v) cfg.true_params.sigma_v = *sim.sigma_v;

  if (sim.covariate_means || sim.covariate_sds || sim.covariate_names) {
    if (!sim.covariate_means || !sim.covariate_sds) {
      throw ValidationError("sim: covariate_means and covariate_sds must be given together");
    }
    if (sim.covariate_means->size() != sim.covariate_sds->size()) {
      throw ValidationError("sim: covariate_means and covariate_sds lengths differ");
    }
    std::vector<CovariateSpec> specs;
    for (std::size_t c = 0; c < sim.covariate_means->size(); ++c) {
      CovariateSpec spec;
      spec.name = (sim.covariate_names && c < sim.covariate_names->size())
                      ? (*sim.covariate_names)[c]
                      : "x" + std::to_string(c + 1);
      spec.mean = (*sim.covariate_means)[c];
      spec.sd = (*sim.covariate_sds)[c];
      spec.clamp_nonnegative = sim.clamp_nonnegative.value_or(false);
      specs.push_back(std::move(spec));
    }
    cfg.covariates = std::move(specs);
    const std::size_t p = cfg.covariates.size() + 1;
    if (!sim.beta1 || !sim.beta2) {
      throw ValidationError("sim: custom covariates require sim.beta1 and sim.beta2");
    }
    cfg.true_params.beta[0].assign(p, 0.0);
    cfg.true_params.beta[1].assign(p, 0.0);
  } else if (sim.clamp_nonnegative) {
    for (auto& c : cfg.covariates) c.clamp_nonnegative = *sim.clamp_nonnegative;
  }
  if (sim.beta1) cfg.true_params.beta[0] = *sim.beta1;
  if (sim.beta2) cfg.true_params.beta[1] = *sim.beta2;
  return cfg;
}

}  // namespace mhmm
