#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ssft/datagen.hpp"
#include "ssft/model.hpp"

namespace ssft {

// Sentinel for "the defining event never happens within the horizon".
// +inf-like: sorts after every finite epoch ascending and before every
// finite epoch descending, which is exactly the ordering both rank
// directions need.
constexpr int kNever = std::numeric_limits<int>::max();

inline bool is_never(int epoch) { return epoch == kNever; }
std::string epoch_to_string(int epoch);
int epoch_from_string(const std::string& s);

// Earliest epoch t* in [1, T] such that the prediction is correct at every
// t >= t*; kNever when the final epoch is incorrect. `correct` covers
// epochs 1..T (epoch 0 excluded). Throws ConfigError on empty input.
int first_learn_epoch(std::span<const std::uint8_t> correct);

// Earliest epoch t* in [1, T'] such that the prediction is incorrect at
// every t >= t*; kNever when the final epoch is correct.
int first_forget_epoch(std::span<const std::uint8_t> correct);

// Number of correct->incorrect transitions between consecutive entries.
// The row may include epoch 0, so a drop from the pre-update state counts.
int forgetting_events(std::span<const std::uint8_t> correct);

struct MetricRecord {
  int example_id = 0;
  Provenance provenance = Provenance::kClean;
  int fslt = kNever;   // first-split learn epoch
  int ssft = kNever;   // second-split forget epoch
  int n_f = 0;         // forgetting events during the first phase
  int acc_l = 0;       // correct first-phase epochs
  double conf_l = 0.0; // summed first-phase confidence on the given label
  int acc_f = 0;       // correct second-phase epochs
  int joint_rank = 0;
};

struct MetricTable {
  int horizon_a = 0;  // first-phase epochs T
  int horizon_b = 0;  // second-phase epochs T'
  std::vector<MetricRecord> rows;
};

// Joins the two tracked histories (same example order) with provenance and
// computes every per-example metric, including joint ranks.
MetricTable compute_metrics(const PredictionHistory& phase_a,
                            const PredictionHistory& phase_b,
                            const std::vector<Example>& examples);

// Combined suspiciousness: rank(ssft ascending, kNever last) plus
// rank(fslt descending, kNever first); joint_rank is the rank of that sum
// with ties broken by the ssft rank and then example_id.
void assign_joint_ranks(std::vector<MetricRecord>& records);

// CSV: example_id,provenance,fslt,ssft,n_f,acc_l,conf_l,acc_f,joint_rank
void write_metrics_csv(std::ostream& out, const MetricTable& table);
MetricTable read_metrics_csv(std::istream& in);

}  // namespace ssft
