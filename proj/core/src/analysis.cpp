#include "ssft/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "ssft/csv.hpp"
#include "ssft/errors.hpp"
#include "ssft/pool.hpp"
#include "ssft/rng.hpp"
#include "ssft/stats.hpp"

namespace ssft {

const char* to_string(MetricName m) {
  switch (m) {
    case MetricName::kFslt: return "fslt";
    case MetricName::kSsft: return "ssft";
    case MetricName::kNf: return "n_f";
    case MetricName::kAccL: return "acc_l";
    case MetricName::kConfL: return "conf_l";
    case MetricName::kAccF: return "acc_f";
    case MetricName::kJoint: return "joint";
  }
  return "?";
}

MetricName metric_from_string(const std::string& s) {
  if (s == "fslt") return MetricName::kFslt;
  if (s == "ssft") return MetricName::kSsft;
  if (s == "n_f") return MetricName::kNf;
  if (s == "acc_l") return MetricName::kAccL;
  if (s == "conf_l") return MetricName::kConfL;
  if (s == "acc_f") return MetricName::kAccF;
  if (s == "joint") return MetricName::kJoint;
  throw ConfigError("unknown metric: " + s);
}

RankDirection suspicious_direction(MetricName m) {
  switch (m) {
    case MetricName::kFslt:
    case MetricName::kNf:
      return RankDirection::kHigherSuspicious;
    default:
      return RankDirection::kLowerSuspicious;
  }
}

double metric_score(const MetricRecord& r, MetricName m) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (m) {
    case MetricName::kFslt: return is_never(r.fslt) ? inf : r.fslt;
    case MetricName::kSsft: return is_never(r.ssft) ? inf : r.ssft;
    case MetricName::kNf: return r.n_f;
    case MetricName::kAccL: return r.acc_l;
    case MetricName::kConfL: return r.conf_l;
    case MetricName::kAccF: return r.acc_f;
    case MetricName::kJoint: return r.joint_rank;
  }
  return 0.0;
}

AucReport auc_from_scores(const std::string& metric_name,
                          const std::vector<double>& scores,
                          const std::vector<bool>& is_positive,
                          RankDirection direction) {
  if (scores.size() != is_positive.size())
    throw ConfigError("auc: score/label size mismatch");
  AucReport report;
  report.metric_name = metric_name;
  report.direction = direction;

  // Orient so that higher oriented score = more suspicious.
  std::vector<double> oriented(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    oriented[i] = direction == RankDirection::kHigherSuspicious ? scores[i]
                                                                : -scores[i];

  for (bool p : is_positive) (p ? report.positives : report.negatives) += 1;
  if (report.positives == 0 || report.negatives == 0)
    throw ConfigError("auc: degenerate class (need both positives and negatives)");

  // Rank-sum form of pair counting; average ranks handle ties as 1/2.
  const std::vector<double> ranks = average_ranks(oriented);
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i)
    if (is_positive[i]) positive_rank_sum += ranks[i];
  const double p = report.positives;
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  report.auc = u / (p * static_cast<double>(report.negatives));
  return report;
}

AucReport auc_for_metric(const MetricTable& table, MetricName m) {
  std::vector<double> scores;
  std::vector<bool> positive;
  scores.reserve(table.rows.size());
  positive.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    scores.push_back(metric_score(r, m));
    positive.push_back(r.provenance == Provenance::kMislabeled);
  }
  return auc_from_scores(to_string(m), scores, positive,
                         suspicious_direction(m));
}

const char* to_string(RemovalStrategy s) {
  switch (s) {
    case RemovalStrategy::kRandom: return "random";
    case RemovalStrategy::kLowestSsft: return "lowest_ssft";
    case RemovalStrategy::kHighestFslt: return "highest_fslt";
    case RemovalStrategy::kLowestAccF: return "lowest_acc_f";
    case RemovalStrategy::kHighestAccLRank: return "highest_acc_l_rank";
    case RemovalStrategy::kJoint: return "joint";
  }
  return "?";
}

RemovalStrategy strategy_from_string(const std::string& s) {
  if (s == "random") return RemovalStrategy::kRandom;
  if (s == "lowest_ssft") return RemovalStrategy::kLowestSsft;
  if (s == "highest_fslt") return RemovalStrategy::kHighestFslt;
  if (s == "lowest_acc_f") return RemovalStrategy::kLowestAccF;
  if (s == "highest_acc_l_rank") return RemovalStrategy::kHighestAccLRank;
  if (s == "joint") return RemovalStrategy::kJoint;
  throw ConfigError("unknown removal strategy: " + s);
}

std::vector<int> removal_order(const MetricTable& table,
                               RemovalStrategy strategy, std::uint64_t seed) {
  std::vector<std::size_t> order(table.rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  if (strategy == RemovalStrategy::kRandom) {
    Rng rng = Rng::from_path(seed, {stream::kRemoval});
    rng.shuffle(order);
  } else {
    MetricName metric = MetricName::kSsft;
    switch (strategy) {
      case RemovalStrategy::kLowestSsft: metric = MetricName::kSsft; break;
      case RemovalStrategy::kHighestFslt: metric = MetricName::kFslt; break;
      case RemovalStrategy::kLowestAccF: metric = MetricName::kAccF; break;
      case RemovalStrategy::kHighestAccLRank: metric = MetricName::kAccL; break;
      case RemovalStrategy::kJoint: metric = MetricName::kJoint; break;
      case RemovalStrategy::kRandom: break;
    }
    const bool higher = suspicious_direction(metric) ==
                        RankDirection::kHigherSuspicious;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       const double sa = metric_score(table.rows[a], metric);
                       const double sb = metric_score(table.rows[b], metric);
                       if (sa != sb) return higher ? sa > sb : sa < sb;
                       return table.rows[a].example_id < table.rows[b].example_id;
                     });
  }

  std::vector<int> ids;
  ids.reserve(order.size());
  for (std::size_t i : order) ids.push_back(table.rows[i].example_id);
  return ids;
}

namespace {

double eval_true_label_accuracy(const LinearModel& model,
                                const std::vector<Example>& eval_set) {
  if (eval_set.empty()) return 0.0;
  int correct = 0;
  for (const Example& ex : eval_set)
    if (model.predict(ex.features) == ex.true_label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(eval_set.size());
}

}  // namespace

RemovalCurveSet removal_retrain(const DatasetSpec& spec,
                                const TrainConfig& cfg_a,
                                const TrainConfig& cfg_b,
                                const RemovalParams& params) {
  RemovalCurveSet set;
  set.eval_count = params.eval_count;
  set.counts = params.counts;
  if (set.counts.empty()) {
    for (double f : {0.0, 0.02, 0.05, 0.10, 0.20, 0.40})
      set.counts.push_back(static_cast<int>(std::llround(f * spec.n)));
  }
  for (int c : set.counts)
    if (c < 0 || c >= spec.n)
      throw ConfigError("removal count " + std::to_string(c) +
                        " outside [0, split size)");
  if (params.seeds.empty()) throw ConfigError("removal: no seeds");

  struct SeedContext {
    std::vector<Example> split_a;
    MetricTable metrics;
    std::vector<Example> eval_set;
  };
  std::vector<SeedContext> contexts(params.seeds.size());

  parallel_for_index(params.seeds.size(), params.jobs, [&](std::size_t si) {
    DatasetSpec seeded = spec;
    seeded.rng_seed = params.seeds[si];
    TrainConfig ca = cfg_a;
    ca.rng_seed = params.seeds[si];
    TrainConfig cb = cfg_b;
    cb.rng_seed = params.seeds[si];
    TwoSplitResult run = two_split_run(seeded, ca, cb);
    SeedContext& ctx = contexts[si];
    ctx.metrics = compute_metrics(run.history_a, run.history_b, run.split_a);
    ctx.split_a = std::move(run.split_a);
    DatasetSpec clean = seeded;
    clean.mislabel_fraction = 0.0;
    ctx.eval_set = sample_eval_set(
        clean, params.eval_count,
        Rng::from_path(params.seeds[si], {stream::kEvalSet}).next_u64());
  });

  // accuracy[strategy][count][seed]
  const std::size_t cells =
      params.strategies.size() * set.counts.size() * params.seeds.size();
  std::vector<double> accuracy(cells, 0.0);
  auto cell = [&](std::size_t st, std::size_t ct, std::size_t sd) {
    return (st * set.counts.size() + ct) * params.seeds.size() + sd;
  };

  parallel_for_index(cells, params.jobs, [&](std::size_t idx) {
    const std::size_t sd = idx % params.seeds.size();
    const std::size_t rest = idx / params.seeds.size();
    const std::size_t ct = rest % set.counts.size();
    const std::size_t st = rest / set.counts.size();

    const SeedContext& ctx = contexts[sd];
    const int count = set.counts[ct];
    const std::vector<int> order = removal_order(
        ctx.metrics, params.strategies[st], params.seeds[sd]);

    std::vector<bool> removed_id(order.size(), false);
    std::map<int, std::size_t> id_to_pos;
    for (std::size_t i = 0; i < ctx.split_a.size(); ++i)
      id_to_pos[ctx.split_a[i].example_id] = i;
    std::vector<bool> drop(ctx.split_a.size(), false);
    for (int i = 0; i < count; ++i)
      drop[id_to_pos.at(order[static_cast<std::size_t>(i)])] = true;

    std::vector<Example> kept;
    kept.reserve(ctx.split_a.size() - static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < ctx.split_a.size(); ++i)
      if (!drop[i]) kept.push_back(ctx.split_a[i]);

    // Retrain from scratch; the init stream depends on seed and count only,
    // so strategies are compared under identical initialization.
    TrainConfig ca = cfg_a;
    ca.rng_seed = Rng::from_path(params.seeds[sd],
                                 {stream::kRemoval, static_cast<std::uint64_t>(count)})
                      .next_u64();
    DatasetSpec seeded = spec;
    seeded.rng_seed = params.seeds[sd];
    LinearModel init = init_model(seeded, ca);
    PhaseResult retrained =
        train_phase(init, kept, std::vector<const Example*>{}, ca, SplitId::kA);
    accuracy[cell(st, ct, sd)] =
        eval_true_label_accuracy(retrained.model, ctx.eval_set);
  });

  for (std::size_t st = 0; st < params.strategies.size(); ++st) {
    RemovalCurve curve;
    curve.strategy = params.strategies[st];
    curve.removal_counts = set.counts;
    curve.seeds_averaged = static_cast<int>(params.seeds.size());
    for (std::size_t ct = 0; ct < set.counts.size(); ++ct) {
      std::vector<double> per_seed;
      for (std::size_t sd = 0; sd < params.seeds.size(); ++sd)
        per_seed.push_back(accuracy[cell(st, ct, sd)]);
      curve.test_accuracy.push_back(mean(per_seed));
      curve.accuracy_stddev.push_back(sample_stddev(per_seed));
    }
    set.curves.push_back(std::move(curve));
  }
  return set;
}

StabilityReport stability(const MetricTable& x, const MetricTable& y) {
  if (x.rows.size() != y.rows.size())
    throw ConfigError("stability: tables have different sizes");

  std::vector<std::size_t> ox(x.rows.size()), oy(y.rows.size());
  std::iota(ox.begin(), ox.end(), std::size_t{0});
  std::iota(oy.begin(), oy.end(), std::size_t{0});
  auto by_id = [](const MetricTable& t) {
    return [&t](std::size_t a, std::size_t b) {
      return t.rows[a].example_id < t.rows[b].example_id;
    };
  };
  std::sort(ox.begin(), ox.end(), by_id(x));
  std::sort(oy.begin(), oy.end(), by_id(y));
  for (std::size_t i = 0; i < ox.size(); ++i)
    if (x.rows[ox[i]].example_id != y.rows[oy[i]].example_id)
      throw ConfigError("stability: example id sets differ");

  auto mapped = [](const MetricTable& t, std::size_t row, MetricName m) {
    const double horizon =
        m == MetricName::kSsft || m == MetricName::kAccF ? t.horizon_b
                                                         : t.horizon_a;
    const double v = metric_score(t.rows[row], m);
    return std::isinf(v) ? horizon + 1.0 : v;
  };

  StabilityReport report;
  report.examples = static_cast<int>(x.rows.size());
  const MetricName metrics[] = {MetricName::kFslt, MetricName::kSsft,
                                MetricName::kNf, MetricName::kAccL,
                                MetricName::kConfL, MetricName::kAccF};
  std::vector<double> ssft_rank_x, ssft_rank_y;
  for (MetricName m : metrics) {
    std::vector<double> vx, vy;
    for (std::size_t i = 0; i < ox.size(); ++i) {
      vx.push_back(mapped(x, ox[i], m));
      vy.push_back(mapped(y, oy[i], m));
    }
    const std::vector<double> rx = average_ranks(vx);
    const std::vector<double> ry = average_ranks(vy);
    report.overall.push_back({m, pearson(rx, ry)});
    if (m == MetricName::kSsft) {
      ssft_rank_x = rx;
      ssft_rank_y = ry;
    }
  }

  // Most-forgotten tenth by the first table's ssft rank.
  const std::size_t subset =
      std::max<std::size_t>(2, x.rows.size() / 10);
  std::vector<std::size_t> order(ssft_rank_x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ssft_rank_x[a] < ssft_rank_x[b];
  });
  std::vector<double> sub_x, sub_y;
  for (std::size_t i = 0; i < subset && i < order.size(); ++i) {
    sub_x.push_back(ssft_rank_x[order[i]]);
    sub_y.push_back(ssft_rank_y[order[i]]);
  }
  report.ssft_bottom_decile = pearson(sub_x, sub_y);
  return report;
}

CurveTables curve_data(const PredictionHistory& phase_a,
                       const PredictionHistory& phase_b,
                       const std::vector<Example>& examples) {
  if (phase_a.num_examples() != examples.size() ||
      phase_b.num_examples() != examples.size())
    throw ConfigError("curve_data: history and example sets disagree");

  CurveTables tables;
  auto build = [&](const PredictionHistory& hist,
                   std::vector<CurvePoint>& out) {
    std::map<Provenance, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < examples.size(); ++i)
      members[examples[i].provenance].push_back(i);
    for (const auto& [prov, rows] : members) {
      for (int t = 0; t <= hist.epochs; ++t) {
        int correct = 0;
        for (std::size_t i : rows)
          correct += hist.correct_row(i)[static_cast<std::size_t>(t)];
        CurvePoint pt;
        pt.provenance = prov;
        pt.epoch = t;
        pt.fraction_correct =
            static_cast<double>(correct) / static_cast<double>(rows.size());
        pt.class_size = static_cast<int>(rows.size());
        out.push_back(pt);
      }
    }
  };
  build(phase_a, tables.phase_a);
  build(phase_b, tables.phase_b);
  return tables;
}

void write_auc_csv(std::ostream& out, const std::vector<AucReport>& reports) {
  out << "metric,auc,positives,negatives,direction\n";
  for (const auto& r : reports)
    out << r.metric_name << ',' << csv::fmt(r.auc) << ',' << r.positives << ','
        << r.negatives << ','
        << (r.direction == RankDirection::kHigherSuspicious ? "higher" : "lower")
        << '\n';
}

void write_removal_csv(std::ostream& out, const RemovalCurveSet& set) {
  out << "strategy,removal_count,mean_accuracy,accuracy_stddev,seeds\n";
  for (const auto& curve : set.curves)
    for (std::size_t i = 0; i < curve.removal_counts.size(); ++i)
      out << to_string(curve.strategy) << ',' << curve.removal_counts[i] << ','
          << csv::fmt(curve.test_accuracy[i]) << ','
          << csv::fmt(curve.accuracy_stddev[i]) << ',' << curve.seeds_averaged
          << '\n';
}

void write_curves_csv(std::ostream& out, const std::vector<CurvePoint>& pts) {
  out << "provenance,epoch,fraction_correct,class_size\n";
  for (const auto& p : pts)
    out << to_string(p.provenance) << ',' << p.epoch << ','
        << csv::fmt(p.fraction_correct) << ',' << p.class_size << '\n';
}

std::string to_json(const StabilityReport& r) {
  nlohmann::ordered_json j;
  j["examples"] = r.examples;
  nlohmann::ordered_json per_metric;
  for (const auto& e : r.overall)
    per_metric[to_string(e.metric)] = e.rank_correlation;
  j["rank_correlation"] = per_metric;
  j["ssft_bottom_decile"] = r.ssft_bottom_decile;
  return j.dump(2);
}

}  // namespace ssft
