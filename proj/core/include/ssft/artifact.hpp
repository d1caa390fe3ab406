#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssft/analysis.hpp"
#include "ssft/datagen.hpp"
#include "ssft/dynamics.hpp"
#include "ssft/theory.hpp"
#include "ssft/train.hpp"

namespace ssft {

// ---------------------------------------------------------------------------
// Declarative experiment configuration (versioned JSON schema)
// ---------------------------------------------------------------------------

enum class AnalysisKind { kMetrics, kAuc, kCurves, kRemoval, kStability, kTheory };

const char* to_string(AnalysisKind a);
AnalysisKind analysis_from_string(const std::string& s);

struct TheorySuiteConfig {
  double delta = 0.05;
  double big_c = 10.0;

  struct {
    BinaryInstanceParams instance{50, 5, 20, 2.0, 1.0};
    double eta = 0.01;
    long iterations = 100000;
    int instances = 20;
    std::uint64_t seed = 1;
  } implicit_bias;

  struct {
    BinaryInstanceParams instance{200, 10, 40, 1.5, 1.0};
    double eta_a = 2e-3;
    double eta_b = 2e-3;
    long max_iterations_a = 100000;
    int epochs_b = 400;
    int runs = 10;
    int log_every = 10;
    std::uint64_t seed = 1;
  } representer;

  AsymptoticParams asymptotic;
  WindowParams window;
};

struct RunConfig {
  int schema_version = 1;
  std::string dataset_type = "mixture";  // "mixture" or "zipf"
  MixtureParams mixture;
  ZipfParams zipf;
  TrainConfig phase_a;
  TrainConfig phase_b;
  std::vector<AnalysisKind> analyses = {AnalysisKind::kMetrics};
  std::string output_dir = "runs";
  std::vector<std::uint64_t> seeds = {1};

  // Analysis knobs (all defaulted).
  std::vector<RemovalStrategy> removal_strategies = {
      RemovalStrategy::kRandom, RemovalStrategy::kLowestSsft,
      RemovalStrategy::kHighestFslt};
  std::vector<int> removal_counts;  // empty = default grid
  int removal_seeds = 5;            // sub-seeds derived from the run seed
  int eval_count = 2000;
  TheorySuiteConfig theory;

  DatasetSpec make_spec(std::uint64_t seed) const;
};

// Parses and validates; error messages carry the offending field path.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& file);
std::string run_config_to_json(const RunConfig& cfg);

// Hash of the normalized config serialization; prefixes run ids.
std::string config_hash(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Artifacts on disk
// ---------------------------------------------------------------------------

struct Manifest {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::map<std::string, std::string> files;  // relative path -> sha256
};

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text);

// Executes one seed of the configured experiment and writes the artifact
// tree (data/, history/, metrics/, reports/, manifest.json, config.json)
// under `run_dir`. Returns the manifest.
Manifest run_single(const RunConfig& cfg, std::uint64_t seed,
                    const std::filesystem::path& run_dir, int jobs = 0);

struct RunGroupResult {
  std::vector<Manifest> manifests;
  std::vector<std::filesystem::path> run_dirs;
};

// All seeds of a config; run directories are <output_root>/<run_id>/.
// When `stability` is among the analyses and at least two seeds ran, a
// cross-seed stability report lands next to the run directories.
RunGroupResult run_group(const RunConfig& cfg,
                         const std::filesystem::path& output_root,
                         int jobs = 0);

// Re-hashes every manifest entry; returns the relative paths that are
// missing or whose contents changed.
std::vector<std::string> verify_manifest(const std::filesystem::path& run_dir);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepCell {
  std::string axis_value;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double auc_ssft = 0.0;
  double auc_joint = 0.0;
  std::string run_id;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepCell> cells;
};

// Applies each value to the named config field (dotted path, e.g.
// "phase_b.learning_rate" or "phase_a.optimizer"), runs the grid across
// values x seeds, and records the label-noise AUCs per cell. Failed cells
// carry their error and the sweep keeps going.
SweepResult run_sweep(const RunConfig& base, const std::string& axis,
                      const std::vector<std::string>& values,
                      const std::filesystem::path& output_root, int jobs = 0);

void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

// ---------------------------------------------------------------------------
// Theory report bundle
// ---------------------------------------------------------------------------

struct ImplicitBiasSuiteReport {
  std::vector<double> cosines;
  double min_cosine = 0.0;
  double mean_cosine = 0.0;
  std::vector<double> final_residual_norms;
  double max_kkt_residual = 0.0;
};

ImplicitBiasSuiteReport implicit_bias_suite(const TheorySuiteConfig& cfg,
                                            int jobs = 0);

struct RepresenterRunSummary {
  int run = 0;
  bool separable = true;
  bool all_nonnegative = true;
  double max_reconstruction_error = 0.0;
  double final_delta = 0.0;
};

struct RepresenterSuiteReport {
  std::vector<RepresenterRunSummary> runs;
  bool all_ok = true;
};

RepresenterSuiteReport representer_suite(const TheorySuiteConfig& cfg,
                                         int jobs = 0);

// Runs all four suites and writes reports/theory/*.json plus raw outcome
// CSVs under `out_dir`. Advisory: always returns normally, with failure
// flags embedded in the reports.
void run_theory_bundle(const TheorySuiteConfig& cfg,
                       const std::filesystem::path& out_dir, int jobs,
                       std::optional<int> trials_override);

// ---------------------------------------------------------------------------
// Shared file helpers
// ---------------------------------------------------------------------------

void write_file(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

void write_history_csv(std::ostream& out, const PredictionHistory& history);
PredictionHistory read_history_csv(std::istream& in);

std::string weights_to_json(const LinearModel& model);
LinearModel weights_from_json(const std::string& text);

}  // namespace ssft
