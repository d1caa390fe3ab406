// Command-line front end: declarative experiment runs, sweeps, the
// theory suites, metric recomputation from persisted logs, and artifact
// verification. Progress goes to stderr; machine output goes to files.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ssft/analysis.hpp"
#include "ssft/artifact.hpp"
#include "ssft/dynamics.hpp"
#include "ssft/errors.hpp"

namespace fs = std::filesystem;

namespace {

fs::path output_root_for(const std::string& flag_out,
                         const std::string& config_dir) {
  if (!flag_out.empty()) return flag_out;
  fs::path root = ".";
  if (const char* env = std::getenv("SSFT_OUTPUT_ROOT")) root = env;
  return root / config_dir;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            int jobs, bool quick, const std::string& out_flag) {
  ssft::RunConfig cfg = ssft::load_run_config(config_path);
  if (seed) cfg.seeds = {*seed};
  if (quick && cfg.seeds.size() > 1) cfg.seeds.resize(1);

  const fs::path root = output_root_for(out_flag, cfg.output_dir);
  const ssft::RunGroupResult result = ssft::run_group(cfg, root, jobs);
  for (const auto& m : result.manifests)
    std::cerr << "artifact: " << (root / m.run_id).string() << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::string& values_csv, int jobs,
              const std::string& out_flag) {
  ssft::RunConfig cfg = ssft::load_run_config(config_path);
  std::vector<std::string> values;
  std::stringstream ss(values_csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) values.push_back(item);
  if (values.empty()) throw ssft::ConfigError("--values: empty list");

  const fs::path root =
      output_root_for(out_flag, cfg.output_dir) / ("sweep_" + axis);
  const ssft::SweepResult sweep = ssft::run_sweep(cfg, axis, values, root, jobs);

  std::ostringstream table;
  ssft::write_sweep_csv(table, sweep);
  ssft::write_file(root / "sweep.csv", table.str());
  std::cerr << "sweep table: " << (root / "sweep.csv").string() << "\n";

  int failed = 0;
  for (const auto& c : sweep.cells) failed += c.ok ? 0 : 1;
  if (failed > 0)
    std::cerr << "warning: " << failed << " sweep cell(s) failed\n";
  return 0;
}

int cmd_theory(const std::string& config_path, int jobs,
               std::optional<int> trials, bool quick,
               const std::string& out_flag) {
  ssft::TheorySuiteConfig cfg;
  std::string out_dir = "theory_runs";
  if (!config_path.empty()) {
    const std::string text = ssft::read_file(config_path);
    // Accept either a full run config (theory section) or a bare theory
    // config document.
    try {
      const ssft::RunConfig run_cfg = ssft::parse_run_config(text);
      cfg = run_cfg.theory;
      out_dir = run_cfg.output_dir;
    } catch (const ssft::ConfigError&) {
      const ssft::RunConfig run_cfg =
          ssft::parse_run_config(std::string("{\"dataset\":{},\"phase_a\":{},"
                                             "\"phase_b\":{},\"theory\":") +
                                 text + "}");
      cfg = run_cfg.theory;
    }
  }
  if (quick && !trials) trials = 10;
  const fs::path root = output_root_for(out_flag, out_dir);
  ssft::run_theory_bundle(cfg, root, jobs, trials);
  std::cerr << "theory reports: " << (root / "reports/theory").string() << "\n";
  return 0;
}

int cmd_metrics(const std::string& history_dir) {
  const fs::path dir = history_dir;
  std::ifstream in_a(dir / "history_a.csv");
  std::ifstream in_b(dir / "history_b.csv");
  if (!in_a || !in_b)
    throw ssft::IoError("expected history_a.csv and history_b.csv under " +
                        dir.string());
  const ssft::PredictionHistory hist_a = ssft::read_history_csv(in_a);
  const ssft::PredictionHistory hist_b = ssft::read_history_csv(in_b);

  // Provenance, when the data dump sits next to the history logs.
  std::map<int, ssft::Provenance> provenance;
  const fs::path split_a = dir.parent_path() / "data" / "split_a.csv";
  if (fs::exists(split_a)) {
    std::ifstream in(split_a);
    for (const ssft::Example& ex : ssft::read_split_csv(in))
      provenance[ex.example_id] = ex.provenance;
  }

  std::vector<ssft::Example> stubs;
  for (int id : hist_a.example_ids) {
    ssft::Example ex;
    ex.example_id = id;
    const auto it = provenance.find(id);
    ex.provenance = it == provenance.end() ? ssft::Provenance::kClean : it->second;
    stubs.push_back(std::move(ex));
  }

  const ssft::MetricTable table = ssft::compute_metrics(hist_a, hist_b, stubs);
  std::ostringstream out;
  ssft::write_metrics_csv(out, table);
  const fs::path target = dir / "metrics_recomputed.csv";
  ssft::write_file(target, out.str());
  std::cerr << "metrics: " << target.string() << "\n";
  return 0;
}

int cmd_report(const std::string& artifact_dir) {
  const fs::path dir = artifact_dir;
  const std::vector<std::string> bad = ssft::verify_manifest(dir);
  if (bad.empty()) {
    std::cerr << "manifest: all files present, hashes match\n";
  } else {
    for (const auto& b : bad) std::cerr << "manifest: " << b << "\n";
    return 3;
  }
  const fs::path summary = dir / "reports" / "summary.json";
  if (fs::exists(summary)) std::cerr << ssft::read_file(summary) << "\n";
  const fs::path auc = dir / "reports" / "auc.csv";
  if (fs::exists(auc)) std::cerr << ssft::read_file(auc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-phase training dynamics workbench"};
  app.require_subcommand(1);

  std::string config_path, out_flag, axis, values_csv, history_dir, artifact_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  int jobs = 0;
  bool quick = false;

  auto* run = app.add_subcommand("run", "execute a configured experiment");
  run->add_option("config", config_path, "config json")->required();
  run->add_option("--seed", seed, "single seed override");
  run->add_option("--jobs", jobs, "worker threads (0 = auto)");
  run->add_flag("--quick", quick, "first seed only");
  run->add_option("--out", out_flag, "output root override");

  auto* sweep = app.add_subcommand("sweep", "grid over one config field");
  sweep->add_option("config", config_path, "config json")->required();
  sweep->add_option("--axis", axis, "dotted config field, e.g. phase_b.learning_rate")
      ->required();
  sweep->add_option("--values", values_csv, "comma-separated values")->required();
  sweep->add_option("--jobs", jobs, "worker threads (0 = auto)");
  sweep->add_option("--out", out_flag, "output root override");

  auto* theory = app.add_subcommand("theory", "run the theory suites");
  theory->add_option("config", config_path, "config json (optional sections)");
  theory->add_option("--jobs", jobs, "worker threads (0 = auto)");
  theory->add_option("--trials", trials, "override Monte Carlo trial counts");
  theory->add_flag("--quick", quick, "10-trial quick mode");
  theory->add_option("--out", out_flag, "output root override");

  auto* metrics = app.add_subcommand("metrics", "recompute metrics from history logs");
  metrics->add_option("history-dir", history_dir, "directory with history csv files")
      ->required();

  auto* report = app.add_subcommand("report", "verify and summarize an artifact");
  report->add_option("artifact-dir", artifact_dir, "run directory with manifest.json")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, jobs, quick, out_flag);
    if (sweep->parsed())
      return cmd_sweep(config_path, axis, values_csv, jobs, out_flag);
    if (theory->parsed())
      return cmd_theory(config_path, jobs, trials, quick, out_flag);
    if (metrics->parsed()) return cmd_metrics(history_dir);
    if (report->parsed()) return cmd_report(artifact_dir);
  } catch (const ssft::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ssft::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 2;
  } catch (const ssft::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
