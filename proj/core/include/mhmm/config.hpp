#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mhmm/inference.hpp"
#include "mhmm/model.hpp"
#include "mhmm/policy.hpp"
#include "mhmm/simulate.hpp"

namespace mhmm {

// Simulation block of the run configuration. When `fixture` is set
// ("acceptance" or "transactions") the corresponding built-in configuration
// is used and the other keys refine it.
struct SimBlock {
  std::string fixture = "transactions";
  std::optional<int> n_borrowers;
  std::optional<int> weeks_min;
  std::optional<int> weeks_max;
  std::optional<std::vector<double>> beta1;
  std::optional<std::vector<double>> beta2;
  std::optional<double> sigma_u;
  std::optional<double> mu1;
  std::optional<double> mu2;
  std::optional<double> sigma_v;
  std::optional<std::vector<std::string>> covariate_names;
  std::optional<std::vector<double>> covariate_means;
  std::optional<std::vector<double>> covariate_sds;
  std::optional<bool> clamp_nonnegative;
};

struct RunConfig {
  std::string input;
  std::string output_dir = "out";
  PriorConfig prior;
  McmcConfig mcmc;
  PolicyConfig policy;
  bool standardize = true;
  std::string week_anchor = "monday";
  SimBlock sim;
};

// Flat `key = value` file; '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path);

// Applies dotted keys (paths.input, model.beta_prior_scale, mcmc.iterations,
// policy.window, ingest.standardize, ingest.week_anchor, sim.*) onto config.
// Unknown keys throw ValidationError.
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

// All recognized dotted keys, for CLI flag generation.
std::vector<std::string> config_keys();

// Resolves the SimBlock into a full SimulationConfig.
SimulationConfig build_simulation_config(const SimBlock& sim, std::uint64_t seed);

}  // namespace mhmm
