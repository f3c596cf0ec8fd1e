#include "cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mhmm/config.hpp"
#include "mhmm/decoding.hpp"
#include "mhmm/errors.hpp"
#include "mhmm/evaluation.hpp"
#include "mhmm/inference.hpp"
#include "mhmm/ingest.hpp"
#include "mhmm/io.hpp"
#include "mhmm/likelihood.hpp"
#include "mhmm/policy.hpp"
#include "mhmm/simulate.hpp"

namespace mhmm::cli {

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::map<std::string, std::string> overrides;  // dotted key -> value
  std::optional<long> seed;
  std::optional<int> threads;
  std::string samples_path;
  std::string baseline_samples_path;
  std::string states_path;
  bool baseline = false;
  bool from_transactions = false;
};

// Registers --config, --seed, --threads and one flag per dotted config key.
void add_common_options(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Flat key = value configuration file");
  cmd->add_option("--seed", args.seed, "Seed governing all randomness");
  cmd->add_option("--threads", args.threads, "Max worker threads (0 = one per chain)");
  for (const auto& key : config_keys()) {
    cmd->add_option_function<std::string>(
        "--" + key,
        [&args, key](const std::string& value) { args.overrides[key] = value; },
        "Override config key " + key);
  }
}

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig config;
  if (!args.config_path.empty()) {
    for (const auto& [key, value] : parse_config_file(args.config_path)) {
      apply_config_entry(config, key, value);
    }
  }
  for (const auto& [key, value] : args.overrides) {
    apply_config_entry(config, key, value);
  }
  if (args.seed) config.mcmc.seed = static_cast<std::uint64_t>(*args.seed);
  if (args.threads) config.mcmc.threads = *args.threads;
  return config;
}

PanelDataset load_panel(const RunConfig& config, const CommonArgs& args) {
  if (config.input.empty()) {
    throw ValidationError("no input file; set paths.input or --paths.input");
  }
  if (!fs::exists(config.input)) {
    throw ValidationError("input file does not exist: " + config.input);
  }
  if (args.from_transactions) {
    const auto anchor = parse_weekday(config.week_anchor);
    if (!anchor) throw ValidationError("unknown week anchor: " + config.week_anchor);
    IngestReport report;
    const auto transactions = io::read_transactions_csv(config.input, &report);
    for (const auto& [line, reason] : report.rejected_lines) {
      std::cerr << "warning: " << config.input << " line " << line << " rejected: " << reason
                << "\n";
    }
    return aggregate_weekly(transactions, *anchor, config.standardize);
  }
  return io::read_panel_csv(config.input, config.standardize);
}

fs::path artifact(const RunConfig& config, const char* name) {
  return fs::path(config.output_dir) / name;
}

int cmd_simulate(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  const SimulationConfig sim = build_simulation_config(config.sim, config.mcmc.seed);
  const SimulationResult result = simulate_panel(sim);
  io::write_panel_csv(artifact(config, "panel.csv"), result.panel);
  io::write_truth_json(artifact(config, "truth.json"), result.truth);
  std::cout << "wrote " << artifact(config, "panel.csv").string() << " and "
            << artifact(config, "truth.json").string() << "\n";
  return 0;
}

int cmd_fit(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  const PanelDataset panel = load_panel(config, args);
  const PosteriorSamples samples = run_mcmc(panel, config.prior, config.mcmc);
  io::write_samples_csv(artifact(config, "samples.csv"), samples);
  io::write_summary_json(artifact(config, "summary.json"), summarize(samples),
                         samples.model, samples.size());
  std::cout << "wrote " << artifact(config, "samples.csv").string() << " ("
            << samples.size() << " draws)\n";
  if (args.baseline) {
    const PosteriorSamples base = fit_me_poisson(panel, config.prior, config.mcmc);
    io::write_samples_csv(artifact(config, "baseline_samples.csv"), base);
    io::write_summary_json(artifact(config, "baseline_summary.json"), summarize(base),
                           base.model, base.size());
    std::cout << "wrote " << artifact(config, "baseline_samples.csv").string() << " ("
              << base.size() << " draws)\n";
  }
  return 0;
}

PosteriorSamples load_samples(const std::string& explicit_path, const RunConfig& config,
                              const char* default_name) {
  const fs::path path =
      explicit_path.empty() ? artifact(config, default_name) : fs::path(explicit_path);
  if (!fs::exists(path)) {
    throw ValidationError("samples file does not exist: " + path.string());
  }
  return io::read_samples_csv(path);
}

int cmd_decode(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  const PanelDataset panel = load_panel(config, args);
  const PosteriorSamples samples = load_samples(args.samples_path, config, "samples.csv");
  const std::vector<StatePath> paths = decode_panel(panel, samples);
  io::write_states_csv(artifact(config, "states.csv"), paths, panel);
  std::cout << "wrote " << artifact(config, "states.csv").string() << "\n";
  return 0;
}

int cmd_policy(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  const fs::path states_path = args.states_path.empty()
                                   ? artifact(config, "states.csv")
                                   : fs::path(args.states_path);
  if (!fs::exists(states_path)) {
    throw ValidationError("states file does not exist: " + states_path.string());
  }
  const std::vector<StatePath> paths = io::read_states_csv(states_path);
  const PolicyReport report = run_policy(paths, config.policy);
  io::write_policy_json(artifact(config, "policy.json"), report);
  std::cout << "wrote " << artifact(config, "policy.json").string() << "\n";
  return 0;
}

std::vector<std::pair<std::string, MetricsResult>> compute_metrics(
    const PanelDataset& panel, const PosteriorSamples& samples,
    const PosteriorSamples* baseline) {
  std::vector<std::pair<std::string, MetricsResult>> metrics;
  const ModelParameters point = posterior_median_parameters(samples);
  const PredictionSet hmm_pred = predict_panel(panel, point, /*hmm=*/true);
  metrics.emplace_back(hmm_pred.model_tag, weekly_metrics(hmm_pred));
  if (baseline != nullptr) {
    const ModelParameters base_point = posterior_median_parameters(*baseline);
    const PredictionSet glmm_pred = predict_panel(panel, base_point, /*hmm=*/false);
    metrics.emplace_back(glmm_pred.model_tag, weekly_metrics(glmm_pred));
  }
  return metrics;
}

int cmd_evaluate(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  const PanelDataset panel = load_panel(config, args);
  const PosteriorSamples samples = load_samples(args.samples_path, config, "samples.csv");
  const PosteriorSamples baseline =
      load_samples(args.baseline_samples_path, config, "baseline_samples.csv");
  const auto metrics = compute_metrics(panel, samples, &baseline);
  io::write_metrics_csv(artifact(config, "metrics.csv"), metrics);
  std::cout << "wrote " << artifact(config, "metrics.csv").string() << "\n";
  return 0;
}

int cmd_report(const CommonArgs& args) {
  const RunConfig config = resolve_config(args);
  const PanelDataset panel = load_panel(config, args);
  const PosteriorSamples samples = load_samples(args.samples_path, config, "samples.csv");

  std::optional<PosteriorSamples> baseline;
  const fs::path base_path = args.baseline_samples_path.empty()
                                 ? artifact(config, "baseline_samples.csv")
                                 : fs::path(args.baseline_samples_path);
  if (fs::exists(base_path)) baseline = io::read_samples_csv(base_path);

  const std::vector<StatePath> paths = decode_panel(panel, samples);
  const PolicyReport policy = run_policy(paths, config.policy);
  const auto metrics =
      compute_metrics(panel, samples, baseline ? &*baseline : nullptr);
  const PosteriorSummary summary = summarize(samples);
  std::optional<PosteriorSummary> baseline_summary;
  if (baseline) baseline_summary = summarize(*baseline);

  io::ReportBundle bundle;
  bundle.summary = &summary;
  bundle.baseline_summary = baseline_summary ? &*baseline_summary : nullptr;
  bundle.policy = &policy;
  bundle.metrics = metrics;
  io::write_report_json(artifact(config, "report.json"), bundle);
  std::cout << "wrote " << artifact(config, "report.json").string() << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Two-state mixed Poisson hidden Markov modeling of weekly loan counts"};
  app.require_subcommand(1);

  CommonArgs sim_args, fit_args, decode_args, policy_args, eval_args, report_args;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic panel and its truth");
  add_common_options(sim, sim_args);

  auto* fit = app.add_subcommand("fit", "Fit the hidden-state model to a panel");
  add_common_options(fit, fit_args);
  fit->add_flag("--baseline", fit_args.baseline, "Also fit the no-hidden-state baseline");
  fit->add_flag("--from-transactions", fit_args.from_transactions,
                "Input is a transactions CSV to aggregate weekly");

  auto* decode = app.add_subcommand("decode", "Viterbi-decode states at posterior medians");
  add_common_options(decode, decode_args);
  decode->add_option("--samples", decode_args.samples_path, "Posterior samples CSV");
  decode->add_flag("--from-transactions", decode_args.from_transactions,
                   "Input is a transactions CSV to aggregate weekly");

  auto* policy = app.add_subcommand("policy", "Classify borrowers from decoded states");
  add_common_options(policy, policy_args);
  policy->add_option("--states", policy_args.states_path, "Decoded states CSV");

  auto* evaluate = app.add_subcommand("evaluate", "Weekly MAE/MSE for both models");
  add_common_options(evaluate, eval_args);
  evaluate->add_option("--samples", eval_args.samples_path, "Posterior samples CSV");
  evaluate->add_option("--baseline-samples", eval_args.baseline_samples_path,
                       "Baseline samples CSV");
  evaluate->add_flag("--from-transactions", eval_args.from_transactions,
                     "Input is a transactions CSV to aggregate weekly");

  auto* report = app.add_subcommand("report", "Consolidated plot-ready JSON report");
  add_common_options(report, report_args);
  report->add_option("--samples", report_args.samples_path, "Posterior samples CSV");
  report->add_option("--baseline-samples", report_args.baseline_samples_path,
                     "Baseline samples CSV (optional)");
  report->add_flag("--from-transactions", report_args.from_transactions,
                   "Input is a transactions CSV to aggregate weekly");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (fit->parsed()) return cmd_fit(fit_args);
    if (decode->parsed()) return cmd_decode(decode_args);
    if (policy->parsed()) return cmd_policy(policy_args);
    if (evaluate->parsed()) return cmd_evaluate(eval_args);
    if (report->parsed()) return cmd_report(report_args);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace mhmm::cli
