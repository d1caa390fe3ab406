#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ssft/dynamics.hpp"
#include "ssft/train.hpp"

namespace ssft {

enum class RankDirection { kLowerSuspicious, kHigherSuspicious };

enum class MetricName { kFslt, kSsft, kNf, kAccL, kConfL, kAccF, kJoint };

const char* to_string(MetricName m);
MetricName metric_from_string(const std::string& s);

// Which tail of the metric flags label noise. kNever sorts as +inf under
// either direction, keeping never-learned examples suspicious by fslt and
// never-forgotten examples unsuspicious by ssft.
RankDirection suspicious_direction(MetricName m);

// Metric value as a double with kNever mapped to +inf.
double metric_score(const MetricRecord& r, MetricName m);

struct AucReport {
  std::string metric_name;
  double auc = 0.5;
  int positives = 0;
  int negatives = 0;
  RankDirection direction = RankDirection::kLowerSuspicious;
};

// Pair-counting AUC (ties count 0.5) for separating positives from
// negatives, oriented so that 1.0 means the suspicious tail is all
// positives. Throws ConfigError when either class is empty.
AucReport auc_from_scores(const std::string& metric_name,
                          const std::vector<double>& scores,
                          const std::vector<bool>& is_positive,
                          RankDirection direction);

// Positives are provenance == mislabeled; negatives are everything else.
AucReport auc_for_metric(const MetricTable& table, MetricName m);

// ---------------------------------------------------------------------------
// Removal-and-retrain utility curves
// ---------------------------------------------------------------------------

enum class RemovalStrategy {
  kRandom,
  kLowestSsft,
  kHighestFslt,
  kLowestAccF,
  kHighestAccLRank,
  kJoint,
};

const char* to_string(RemovalStrategy s);
RemovalStrategy strategy_from_string(const std::string& s);

struct RemovalCurve {
  RemovalStrategy strategy = RemovalStrategy::kRandom;
  std::vector<int> removal_counts;
  std::vector<double> test_accuracy;  // mean over seeds, aligned with counts
  std::vector<double> accuracy_stddev;
  int seeds_averaged = 0;
};

struct RemovalCurveSet {
  std::vector<int> counts;
  std::vector<RemovalCurve> curves;
  int eval_count = 0;
};

struct RemovalParams {
  std::vector<RemovalStrategy> strategies = {RemovalStrategy::kRandom,
                                             RemovalStrategy::kLowestSsft,
                                             RemovalStrategy::kHighestFslt};
  std::vector<int> counts;  // empty = {0, 2%, 5%, 10%, 20%, 40%} of the split
  int eval_count = 2000;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int jobs = 0;
};

// Drops the most suspicious examples per strategy, retrains the first phase
// from scratch on what is left, and scores the result on a fresh clean
// sample. Accuracy is against true labels, averaged over seeds.
RemovalCurveSet removal_retrain(const DatasetSpec& spec,
                                const TrainConfig& cfg_a,
                                const TrainConfig& cfg_b,
                                const RemovalParams& params);

// Most-suspicious-first removal order over the split-A rows of `table`.
std::vector<int> removal_order(const MetricTable& table,
                               RemovalStrategy strategy, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Cross-run stability
// ---------------------------------------------------------------------------

struct StabilityEntry {
  MetricName metric = MetricName::kSsft;
  double rank_correlation = 0.0;
};

struct StabilityReport {
  std::vector<StabilityEntry> overall;
  double ssft_bottom_decile = 0.0;  // correlation on the most-forgotten tenth
  int examples = 0;
};

// Pearson correlation of metric ranks between two runs over the same
// example ids (kNever mapped to horizon + 1 before ranking). Throws
// ConfigError when the id sets differ.
StabilityReport stability(const MetricTable& x, const MetricTable& y);

// ---------------------------------------------------------------------------
// Plot-ready learning/forgetting curves
// ---------------------------------------------------------------------------

struct CurvePoint {
  Provenance provenance = Provenance::kClean;
  int epoch = 0;
  double fraction_correct = 0.0;
  int class_size = 0;
};

struct CurveTables {
  std::vector<CurvePoint> phase_a;
  std::vector<CurvePoint> phase_b;
};

CurveTables curve_data(const PredictionHistory& phase_a,
                       const PredictionHistory& phase_b,
                       const std::vector<Example>& examples);

void write_auc_csv(std::ostream& out, const std::vector<AucReport>& reports);
void write_removal_csv(std::ostream& out, const RemovalCurveSet& set);
void write_curves_csv(std::ostream& out, const std::vector<CurvePoint>& pts);
std::string to_json(const StabilityReport& r);

}  // namespace ssft
