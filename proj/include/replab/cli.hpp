#ifndef REPLAB_CLI_HPP
#define REPLAB_CLI_HPP

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "replab/harness.hpp"

namespace replab {

// 0 = clean, 1 = error (bad config/arguments/io), 2 = completed with
// partial failures (failed tasks or crashed runs).
inline constexpr int kExitClean = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitPartial = 2;

namespace cli_detail {

inline std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

inline fs::path default_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("REPLAB_OUT")) return env;
  return "out";
}

inline std::string order_label(const std::vector<fs::path>& inputs) {
  // reads the order flag from meta.json next to the first results file
  if (!inputs.empty()) {
    const fs::path meta = inputs.front().parent_path() / "meta.json";
    if (fs::exists(meta)) {
      try {
        const auto j = nlohmann::json::parse(slurp(meta.string()));
        if (j.contains("order")) return j["order"].get<std::string>();
      } catch (const std::exception&) {
      }
    }
  }
  return "unknown";
}

}  // namespace cli_detail

inline int cli_main(std::vector<std::string> args) {
  CLI::App app{"desk-scale continual-learning lab for latent diffusion models"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_flag;
  int jobs = 1;
  std::uint64_t seed_offset = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config)
      cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--out", out_flag, "output directory (default $REPLAB_OUT or ./out)");
    cmd->add_option("--jobs", jobs, "parallel (method x seed) jobs")->check(CLI::PositiveNumber);
    cmd->add_option("--seed-offset", seed_offset, "offset added to every run seed");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run every (method x seed) job of a config");
  add_common(run_cmd, true);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run an ablation sweep around a base config");
  std::string axis;
  add_common(sweep_cmd, true);
  sweep_cmd->add_option("--axis", axis, "memory_size | lambda | task_order")->required();

  CLI::App* stats_cmd = app.add_subcommand("stats", "pairwise significance tests over results");
  std::vector<std::string> results_files;
  std::string pairs_spec = "all";
  add_common(stats_cmd, false);
  stats_cmd->add_option("--results", results_files, "aggregate csv file(s)")->required();
  stats_cmd->add_option("--pairs", pairs_spec, "a:b[,c:d...] or 'all' (default)");

  CLI::App* report_cmd = app.add_subcommand("report", "emit per-metric curve data for plotting");
  add_common(report_cmd, false);
  report_cmd->add_option("--results", results_files, "aggregate csv file(s)")->required();

  // CLI11 wants argv-style input, reversed
  std::vector<const char*> argv;
  argv.push_back("replab");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitClean : kExitError;
  }

  try {
    const fs::path out_root = cli_detail::default_out_dir(out_flag);

    if (run_cmd->parsed()) {
      const ExperimentConfig cfg = ExperimentConfig::parse(cli_detail::slurp(config_path));
      const ExperimentOutput out = run_experiment(cfg, jobs, seed_offset);
      write_experiment_files(cfg, out, out_root / cfg.name);
      std::cout << "wrote " << (out_root / cfg.name).string() << " (" << out.records.size()
                << " eval rows)\n";
      return (out.any_task_failures || out.any_crashes) ? kExitPartial : kExitClean;
    }

    if (sweep_cmd->parsed()) {
      const ExperimentConfig cfg = ExperimentConfig::parse(cli_detail::slurp(config_path));
      const SweepResult sweep = run_sweep(cfg, axis, jobs, seed_offset);
      const fs::path dir = out_root / (cfg.name + "_sweep_" + axis);
      write_sweep_files(sweep, dir);
      bool partial = false;
      for (const auto& point : sweep.points)
        partial |= point.output.any_task_failures || point.output.any_crashes;
      std::cout << "wrote " << dir.string() << " (" << sweep.points.size() << " points)\n";
      return partial ? kExitPartial : kExitClean;
    }

    std::vector<fs::path> inputs;
    for (const auto& f : results_files) inputs.emplace_back(f);
    std::vector<EvalRecord> records;
    for (const auto& f : inputs) {
      const auto part = read_aggregate_csv(f);
      records.insert(records.end(), part.begin(), part.end());
    }

    if (stats_cmd->parsed()) {
      std::vector<std::string> methods;
      for (const auto& r : records)
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
          methods.push_back(r.method);
      const auto pairs = parse_pairs(pairs_spec, methods);
      const SignificanceReport report = run_significance(records, pairs);
      write_significance(report, out_root);
      int significant = 0;
      for (const auto& r : report.rows) significant += r.reject ? 1 : 0;
      std::cout << "wrote " << (out_root / "significance.csv").string() << " (" << report.rows.size()
                << " tests, " << significant << " significant)\n";
      return kExitClean;
    }

    // report
    atomic_write(out_root / "curves.csv", curves_csv(records, cli_detail::order_label(inputs)));
    std::cout << "wrote " << (out_root / "curves.csv").string() << "\n";
    return kExitClean;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}

inline int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(std::move(args));
}

}  // namespace replab

#endif  // REPLAB_CLI_HPP
