#include "ssft/dynamics.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ssft/csv.hpp"
#include "ssft/errors.hpp"

namespace ssft {

std::string epoch_to_string(int epoch) {
  return is_never(epoch) ? std::string("NEVER") : std::to_string(epoch);
}

int epoch_from_string(const std::string& s) {
  if (s == "NEVER") return kNever;
  return std::stoi(s);
}

int first_learn_epoch(std::span<const std::uint8_t> correct) {
  if (correct.empty()) throw ConfigError("first_learn_epoch: empty history row");
  const std::size_t t_final = correct.size() - 1;
  if (!correct[t_final]) return kNever;
  // Walk the trailing all-correct run backwards; its first epoch is t*.
  std::size_t start = t_final;
  while (start > 0 && correct[start - 1]) --start;
  return static_cast<int>(start) + 1;  // epochs are 1-indexed
}

int first_forget_epoch(std::span<const std::uint8_t> correct) {
  if (correct.empty()) throw ConfigError("first_forget_epoch: empty history row");
  const std::size_t t_final = correct.size() - 1;
  if (correct[t_final]) return kNever;
  std::size_t start = t_final;
  while (start > 0 && !correct[start - 1]) --start;
  return static_cast<int>(start) + 1;
}

int forgetting_events(std::span<const std::uint8_t> correct) {
  int events = 0;
  for (std::size_t t = 0; t + 1 < correct.size(); ++t)
    if (correct[t] && !correct[t + 1]) ++events;
  return events;
}

MetricTable compute_metrics(const PredictionHistory& phase_a,
                            const PredictionHistory& phase_b,
                            const std::vector<Example>& examples) {
  if (phase_a.num_examples() != phase_b.num_examples() ||
      phase_a.num_examples() != examples.size())
    throw ConfigError("compute_metrics: history and example sets disagree");

  MetricTable table;
  table.horizon_a = phase_a.epochs;
  table.horizon_b = phase_b.epochs;
  table.rows.reserve(examples.size());

  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (phase_a.example_ids[i] != examples[i].example_id ||
        phase_b.example_ids[i] != examples[i].example_id)
      throw ConfigError("compute_metrics: example order mismatch");

    MetricRecord rec;
    rec.example_id = examples[i].example_id;
    rec.provenance = examples[i].provenance;

    const auto row_a = phase_a.correct_row_after_start(i);
    const auto row_b = phase_b.correct_row_after_start(i);
    // A zero-epoch phase leaves the defining events unobservable.
    rec.fslt = row_a.empty() ? kNever : first_learn_epoch(row_a);
    rec.ssft = row_b.empty() ? kNever : first_forget_epoch(row_b);
    rec.n_f = forgetting_events(phase_a.correct_row(i));
    rec.acc_l = static_cast<int>(
        std::count(row_a.begin(), row_a.end(), std::uint8_t{1}));
    rec.acc_f = static_cast<int>(
        std::count(row_b.begin(), row_b.end(), std::uint8_t{1}));
    const auto conf_a = phase_a.confidence_row(i);
    rec.conf_l = std::accumulate(conf_a.begin() + 1, conf_a.end(), 0.0);
    table.rows.push_back(rec);
  }

  assign_joint_ranks(table.rows);
  return table;
}

namespace {

// Ordinal 1-based ranks under `less`, ties broken by example_id so the
// result does not depend on input order.
template <typename Less>
std::vector<int> ordinal_ranks(const std::vector<MetricRecord>& records,
                               Less less) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (less(records[a], records[b])) return true;
    if (less(records[b], records[a])) return false;
    return records[a].example_id < records[b].example_id;
  });
  std::vector<int> rank(records.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    rank[order[pos]] = static_cast<int>(pos) + 1;
  return rank;
}

}  // namespace

void assign_joint_ranks(std::vector<MetricRecord>& records) {
  if (records.empty()) return;
  // kNever == INT_MAX, so plain comparisons give "NEVER last" ascending by
  // ssft and "NEVER first" descending by fslt.
  const auto ssft_rank = ordinal_ranks(
      records, [](const MetricRecord& a, const MetricRecord& b) {
        return a.ssft < b.ssft;
      });
  const auto fslt_rank = ordinal_ranks(
      records, [](const MetricRecord& a, const MetricRecord& b) {
        return a.fslt > b.fslt;
      });

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const int sum_a = ssft_rank[a] + fslt_rank[a];
    const int sum_b = ssft_rank[b] + fslt_rank[b];
    if (sum_a != sum_b) return sum_a < sum_b;
    if (ssft_rank[a] != ssft_rank[b]) return ssft_rank[a] < ssft_rank[b];
    return records[a].example_id < records[b].example_id;
  });
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    records[order[pos]].joint_rank = static_cast<int>(pos) + 1;
}

void write_metrics_csv(std::ostream& out, const MetricTable& table) {
  out << "example_id,provenance,fslt,ssft,n_f,acc_l,conf_l,acc_f,joint_rank\n";
  for (const auto& r : table.rows) {
    out << r.example_id << ',' << to_string(r.provenance) << ','
        << epoch_to_string(r.fslt) << ',' << epoch_to_string(r.ssft) << ','
        << r.n_f << ',' << r.acc_l << ',' << csv::fmt(r.conf_l) << ','
        << r.acc_f << ',' << r.joint_rank << '\n';
  }
}

MetricTable read_metrics_csv(std::istream& in) {
  MetricTable table;
  std::string line;
  if (!std::getline(in, line)) return table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    MetricRecord r;
    std::getline(row, cell, ',');
    r.example_id = std::stoi(cell);
    std::getline(row, cell, ',');
    if (cell == "clean") r.provenance = Provenance::kClean;
    else if (cell == "mislabeled") r.provenance = Provenance::kMislabeled;
    else if (cell == "rare") r.provenance = Provenance::kRare;
    else if (cell == "complex") r.provenance = Provenance::kComplex;
    else throw ConfigError("metrics csv: unknown provenance " + cell);
    std::getline(row, cell, ',');
    r.fslt = epoch_from_string(cell);
    std::getline(row, cell, ',');
    r.ssft = epoch_from_string(cell);
    std::getline(row, cell, ',');
    r.n_f = std::stoi(cell);
    std::getline(row, cell, ',');
    r.acc_l = std::stoi(cell);
    std::getline(row, cell, ',');
    r.conf_l = std::stod(cell);
    std::getline(row, cell, ',');
    r.acc_f = std::stoi(cell);
    std::getline(row, cell, ',');
    r.joint_rank = std::stoi(cell);
    // Horizons are not part of the CSV; callers needing them keep the
    // originating histories around.
    table.horizon_a = std::max(table.horizon_a, is_never(r.fslt) ? 0 : r.fslt);
    table.horizon_b = std::max(table.horizon_b, is_never(r.ssft) ? 0 : r.ssft);
    table.rows.push_back(r);
  }
  return table;
}

}  // namespace ssft
