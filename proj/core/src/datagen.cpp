#include "ssft/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "ssft/csv.hpp"
#include "ssft/errors.hpp"

namespace ssft {

const char* to_string(GroupKind k) {
  switch (k) {
    case GroupKind::kTypical: return "typical";
    case GroupKind::kRare: return "rare";
    case GroupKind::kComplex: return "complex";
  }
  return "?";
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::kClean: return "clean";
    case Provenance::kMislabeled: return "mislabeled";
    case Provenance::kRare: return "rare";
    case Provenance::kComplex: return "complex";
  }
  return "?";
}

const char* to_string(SplitId s) { return s == SplitId::kA ? "A" : "B"; }

namespace {

GroupKind kind_from_string(const std::string& s) {
  if (s == "typical") return GroupKind::kTypical;
  if (s == "rare") return GroupKind::kRare;
  if (s == "complex") return GroupKind::kComplex;
  throw ConfigError("unknown group kind: " + s);
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "clean") return Provenance::kClean;
  if (s == "mislabeled") return Provenance::kMislabeled;
  if (s == "rare") return Provenance::kRare;
  if (s == "complex") return Provenance::kComplex;
  throw ConfigError("unknown provenance: " + s);
}

void validate_spec(const DatasetSpec& spec) {
  if (spec.d <= 0 || spec.k <= 0 || spec.n <= 0 || spec.num_classes < 2)
    throw ConfigError("dataset spec: d, k, n must be positive and num_classes >= 2");
  if (spec.k * static_cast<int>(spec.groups.size()) > spec.d)
    throw ConfigError("support overflow: k * groups = " +
                      std::to_string(spec.k * spec.groups.size()) +
                      " exceeds d = " + std::to_string(spec.d));
  if (spec.mislabel_fraction < 0.0 || spec.mislabel_fraction >= 1.0)
    throw ConfigError("mislabel_fraction must lie in [0, 1)");
  double mass = 0.0;
  for (const auto& g : spec.groups) {
    if (g.frequency < 0.0 || g.frequency > 1.0)
      throw ConfigError("group " + std::to_string(g.group_id) +
                        ": frequency outside [0, 1]");
    if (g.kind == GroupKind::kRare && g.frequency != 0.0)
      throw ConfigError("rare groups are quota-driven; frequency must be 0");
    if (g.label < 0 || g.label >= spec.num_classes)
      throw ConfigError("group " + std::to_string(g.group_id) +
                        ": label out of range");
    mass += g.frequency;
  }
  if (std::abs(mass - 1.0) > 1e-9)
    throw ConfigError("group frequencies must sum to 1 (got " +
                      std::to_string(mass) + ")");
}

// Exact counts from frequencies via largest remainder, summing to total.
std::vector<int> quota_counts(const std::vector<double>& freqs, int total) {
  const std::size_t m = freqs.size();
  std::vector<int> counts(m, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double exact = freqs[i] * total;
    counts[i] = static_cast<int>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - counts[i], i);
  }
  std::sort(remainders.begin(), remainders.end(), [](auto& a, auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int i = 0; i < total - assigned; ++i)
    counts[remainders[static_cast<std::size_t>(i)].second] += 1;
  return counts;
}

}  // namespace

DatasetSpec build_spec(const MixtureParams& p) {
  if (p.typical_groups <= 0)
    throw ConfigError("mixture: need at least one typical group");
  if (p.complex_lambda <= 1.0 && p.complex_groups > 0)
    throw ConfigError("mixture: complex_lambda must exceed 1");
  if (p.typical_mass <= 0.0 || p.typical_mass > 1.0)
    throw ConfigError("mixture: typical_mass must lie in (0, 1]");
  if (p.complex_groups == 0 && p.typical_mass != 1.0)
    throw ConfigError("mixture: no complex groups to carry residual frequency mass");

  DatasetSpec spec;
  spec.d = p.d;
  spec.k = p.k;
  spec.n = p.n;
  spec.num_classes = p.num_classes;
  spec.sigma = p.sigma;
  spec.mislabel_fraction = p.mislabel_fraction;
  spec.rng_seed = p.rng_seed;
  spec.rare_count = p.rare_count;
  spec.balanced = p.balanced;
  spec.mislabel_from_rare = p.mislabel_from_rare;
  spec.mislabel_split_a = p.mislabel_split_a;
  spec.mislabel_split_b = p.mislabel_split_b;

  int gid = 0;
  auto add_group = [&](int label, double mu, double freq, GroupKind kind) {
    GroupSpec g;
    g.group_id = gid;
    g.label = label;
    g.support_begin = gid * p.k;
    g.coordinate_mean = mu;
    g.frequency = freq;
    g.kind = kind;
    spec.groups.push_back(g);
    ++gid;
  };

  for (int i = 0; i < p.typical_groups; ++i)
    add_group(i % p.num_classes, p.mu_typical,
              p.typical_mass / p.typical_groups, GroupKind::kTypical);
  for (int i = 0; i < p.complex_groups; ++i)
    add_group(i % p.num_classes, p.mu_typical / p.complex_lambda,
              (1.0 - p.typical_mass) / p.complex_groups, GroupKind::kComplex);
  // Rare labels continue cycling where the complex groups stopped, so the
  // two sets land on different classes when both are present.
  for (int i = 0; i < p.rare_groups; ++i)
    add_group((p.complex_groups + i) % p.num_classes, p.mu_typical, 0.0,
              GroupKind::kRare);

  validate_spec(spec);
  return spec;
}

DatasetSpec build_zipf_spec(const ZipfParams& p) {
  if (p.num_superclasses <= 0) throw ConfigError("zipf: num_superclasses must be positive");
  if (p.subgroup_sizes.empty()) throw ConfigError("zipf: subgroup_sizes empty");
  for (std::size_t i = 1; i < p.subgroup_sizes.size(); ++i)
    if (p.subgroup_sizes[i] >= p.subgroup_sizes[i - 1])
      throw ConfigError("zipf: subgroup_sizes must be strictly decreasing");

  const int per_class = static_cast<int>(p.subgroup_sizes.size());
  const int total_groups = p.num_superclasses * per_class;
  const int d = p.d > 0 ? p.d : total_groups * p.k;

  std::vector<int> counts(p.subgroup_sizes.size());
  int per_class_total = 0;
  for (std::size_t i = 0; i < p.subgroup_sizes.size(); ++i) {
    counts[i] = static_cast<int>(std::floor(p.subgroup_sizes[i] * p.scale));
    if (counts[i] <= 0)
      throw ConfigError("zipf: scale too small, subgroup count hit zero");
    per_class_total += counts[i];
  }

  DatasetSpec spec;
  spec.d = d;
  spec.k = p.k;
  spec.n = per_class_total * p.num_superclasses;
  spec.num_classes = p.num_superclasses;
  spec.sigma = p.sigma;
  spec.mislabel_fraction = p.mislabel_fraction;
  spec.rng_seed = p.rng_seed;
  spec.balanced = true;

  const double grand_total = static_cast<double>(spec.n);
  int gid = 0;
  for (int c = 0; c < p.num_superclasses; ++c) {
    // Which subgroup gets which size is re-randomized per seed.
    std::vector<int> order(counts.size());
    std::iota(order.begin(), order.end(), 0);
    Rng perm = Rng::from_path(p.rng_seed,
                              {stream::kZipfOrder, static_cast<std::uint64_t>(c)});
    perm.shuffle(order);
    for (int s = 0; s < per_class; ++s) {
      GroupSpec g;
      g.group_id = gid;
      g.label = c;
      g.support_begin = gid * p.k;
      g.coordinate_mean = p.mu;
      g.kind = GroupKind::kTypical;
      g.quota = counts[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])];
      g.frequency = g.quota / grand_total;
      spec.groups.push_back(g);
      ++gid;
    }
  }

  validate_spec(spec);
  return spec;
}

namespace {

// Group index for every slot of one split, in slot order.
std::vector<int> assign_groups(const DatasetSpec& spec, SplitId split,
                               int slots) {
  std::vector<int> non_rare;
  for (const auto& g : spec.groups)
    if (g.kind != GroupKind::kRare)
      non_rare.push_back(g.group_id);

  std::vector<int> assignment;
  assignment.reserve(static_cast<std::size_t>(slots));

  const bool quota_mode =
      spec.balanced ||
      std::any_of(spec.groups.begin(), spec.groups.end(),
                  [](const GroupSpec& g) { return g.quota >= 0; });
  if (quota_mode) {
    std::vector<double> freqs;
    for (int id : non_rare) freqs.push_back(spec.groups[static_cast<std::size_t>(id)].frequency);
    std::vector<int> counts(non_rare.size(), 0);
    bool all_explicit = true;
    int explicit_total = 0;
    for (std::size_t i = 0; i < non_rare.size(); ++i) {
      const int q = spec.groups[static_cast<std::size_t>(non_rare[i])].quota;
      if (q >= 0) {
        counts[i] = q;
        explicit_total += q;
      } else {
        all_explicit = false;
      }
    }
    if (!all_explicit || explicit_total != slots)
      counts = quota_counts(freqs, slots);
    for (std::size_t i = 0; i < non_rare.size(); ++i)
      assignment.insert(assignment.end(), static_cast<std::size_t>(counts[i]),
                        non_rare[i]);
  } else {
    std::vector<double> cum;
    double acc = 0.0;
    for (int id : non_rare) {
      acc += spec.groups[static_cast<std::size_t>(id)].frequency;
      cum.push_back(acc);
    }
    const std::uint64_t split_tag =
        split == SplitId::kA ? stream::kSplitA : stream::kSplitB;
    Rng rng = Rng::from_path(spec.rng_seed, {split_tag, stream::kGroupAssign});
    for (int s = 0; s < slots; ++s) {
      const double u = rng.uniform01() * acc;
      const auto it = std::upper_bound(cum.begin(), cum.end(), u);
      const std::size_t idx = std::min(
          static_cast<std::size_t>(it - cum.begin()), non_rare.size() - 1);
      assignment.push_back(non_rare[idx]);
    }
  }
  return assignment;
}

Example make_example(const DatasetSpec& spec, const GroupSpec& g,
                     SplitId split, int example_id, Rng& noise) {
  Example ex;
  ex.example_id = example_id;
  ex.group_id = g.group_id;
  ex.true_label = g.label;
  ex.given_label = g.label;
  ex.split = split;
  switch (g.kind) {
    case GroupKind::kTypical: ex.provenance = Provenance::kClean; break;
    case GroupKind::kRare: ex.provenance = Provenance::kRare; break;
    case GroupKind::kComplex: ex.provenance = Provenance::kComplex; break;
  }
  ex.features.resize(static_cast<std::size_t>(spec.d));
  noise.fill_normal(ex.features, 0.0, spec.sigma);
  for (int j = g.support_begin; j < g.support_begin + spec.k; ++j)
    ex.features[static_cast<std::size_t>(j)] += g.coordinate_mean;
  return ex;
}

void apply_mislabels(const DatasetSpec& spec, SplitId split,
                     std::vector<Example>& split_examples) {
  const bool designated =
      split == SplitId::kA ? spec.mislabel_split_a : spec.mislabel_split_b;
  if (spec.mislabel_fraction <= 0.0 || !designated) return;

  const GroupKind source_kind =
      spec.mislabel_from_rare ? GroupKind::kRare : GroupKind::kTypical;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < split_examples.size(); ++i)
    if (spec.groups[static_cast<std::size_t>(split_examples[i].group_id)].kind ==
        source_kind)
      candidates.push_back(i);

  const auto flips = static_cast<std::size_t>(
      std::llround(spec.mislabel_fraction * static_cast<double>(candidates.size())));
  const std::uint64_t split_tag =
      split == SplitId::kA ? stream::kSplitA : stream::kSplitB;
  Rng rng = Rng::from_path(spec.rng_seed, {split_tag, stream::kLabelFlip});
  // Partial Fisher-Yates: the first `flips` entries are the chosen subset.
  for (std::size_t i = 0; i < flips && i < candidates.size(); ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.uniform_below(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
    Example& ex = split_examples[candidates[i]];
    if (spec.num_classes == 2) {
      ex.given_label = 1 - ex.true_label;
    } else {
      const int offset =
          1 + static_cast<int>(rng.uniform_below(
                  static_cast<std::uint64_t>(spec.num_classes - 1)));
      ex.given_label = (ex.true_label + offset) % spec.num_classes;
    }
    ex.provenance = Provenance::kMislabeled;
  }
}

std::vector<Example> sample_one_split(const DatasetSpec& spec, SplitId split,
                                      int first_example_id) {
  int rare_total = 0;
  if (split == SplitId::kA)
    for (const auto& g : spec.groups)
      if (g.kind == GroupKind::kRare) rare_total += spec.rare_count;
  const int slots = spec.n - rare_total;
  if (slots < 0)
    throw ConfigError("rare quota exceeds examples per split");

  const std::vector<int> assignment = assign_groups(spec, split, slots);
  const std::uint64_t split_tag =
      split == SplitId::kA ? stream::kSplitA : stream::kSplitB;

  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(spec.n));
  int eid = first_example_id;
  int slot = 0;
  for (int gid : assignment) {
    Rng noise = Rng::from_path(
        spec.rng_seed,
        {split_tag, stream::kNoise, static_cast<std::uint64_t>(slot)});
    out.push_back(make_example(spec, spec.groups[static_cast<std::size_t>(gid)],
                               split, eid, noise));
    ++eid;
    ++slot;
  }
  if (split == SplitId::kA) {
    for (const auto& g : spec.groups) {
      if (g.kind != GroupKind::kRare) continue;
      for (int r = 0; r < spec.rare_count; ++r) {
        Rng noise = Rng::from_path(
            spec.rng_seed,
            {split_tag, stream::kNoise, static_cast<std::uint64_t>(slot)});
        out.push_back(make_example(spec, g, split, eid, noise));
        ++eid;
        ++slot;
      }
    }
  }

  apply_mislabels(spec, split, out);
  return out;
}

}  // namespace

SplitPair sample_splits(const DatasetSpec& spec) {
  validate_spec(spec);
  SplitPair pair;
  pair.a = sample_one_split(spec, SplitId::kA, 0);
  pair.b = sample_one_split(spec, SplitId::kB, static_cast<int>(pair.a.size()));
  return pair;
}

std::vector<Example> sample_eval_set(const DatasetSpec& spec, int count,
                                     std::uint64_t seed) {
  validate_spec(spec);
  std::vector<const GroupSpec*> pool;
  std::vector<double> cum;
  double acc = 0.0;
  for (const auto& g : spec.groups) {
    if (g.kind == GroupKind::kRare) continue;
    pool.push_back(&g);
    acc += g.frequency;
    cum.push_back(acc);
  }
  Rng pick = Rng::from_path(seed, {stream::kEvalSet, stream::kGroupAssign});
  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double u = pick.uniform01() * acc;
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const std::size_t idx =
        std::min(static_cast<std::size_t>(it - cum.begin()), pool.size() - 1);
    Rng noise = Rng::from_path(
        seed, {stream::kEvalSet, stream::kNoise, static_cast<std::uint64_t>(i)});
    out.push_back(make_example(spec, *pool[idx], SplitId::kB, i, noise));
  }
  return out;
}

void write_split_csv(std::ostream& out, const std::vector<Example>& split) {
  if (split.empty()) {
    out << "example_id,group_id,true_label,given_label,provenance\n";
    return;
  }
  out << "example_id,group_id,true_label,given_label,provenance";
  for (std::size_t j = 0; j < split.front().features.size(); ++j)
    out << ",x_" << j;
  out << '\n';
  for (const auto& ex : split) {
    out << ex.example_id << ',' << ex.group_id << ',' << ex.true_label << ','
        << ex.given_label << ',' << to_string(ex.provenance);
    for (double v : ex.features) out << ',' << csv::fmt(v);
    out << '\n';
  }
}

std::vector<Example> read_split_csv(std::istream& in) {
  std::vector<Example> out;
  std::string line;
  if (!std::getline(in, line)) return out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    Example ex;
    std::getline(row, cell, ',');
    ex.example_id = std::stoi(cell);
    std::getline(row, cell, ',');
    ex.group_id = std::stoi(cell);
    std::getline(row, cell, ',');
    ex.true_label = std::stoi(cell);
    std::getline(row, cell, ',');
    ex.given_label = std::stoi(cell);
    std::getline(row, cell, ',');
    ex.provenance = provenance_from_string(cell);
    while (std::getline(row, cell, ','))
      ex.features.push_back(std::stod(cell));
    out.push_back(std::move(ex));
  }
  return out;
}

std::string spec_to_json(const DatasetSpec& spec) {
  nlohmann::ordered_json j;
  j["d"] = spec.d;
  j["k"] = spec.k;
  j["n"] = spec.n;
  j["num_classes"] = spec.num_classes;
  j["sigma"] = spec.sigma;
  j["mislabel_fraction"] = spec.mislabel_fraction;
  j["rng_seed"] = spec.rng_seed;
  j["rare_count"] = spec.rare_count;
  j["balanced"] = spec.balanced;
  j["mislabel_from_rare"] = spec.mislabel_from_rare;
  j["mislabel_split_a"] = spec.mislabel_split_a;
  j["mislabel_split_b"] = spec.mislabel_split_b;
  j["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : spec.groups) {
    nlohmann::ordered_json gj;
    gj["group_id"] = g.group_id;
    gj["label"] = g.label;
    std::vector<int> indices;
    for (int i = g.support_begin; i < g.support_begin + spec.k; ++i)
      indices.push_back(i);
    gj["signal_indices"] = indices;
    gj["coordinate_mean"] = g.coordinate_mean;
    gj["frequency"] = g.frequency;
    gj["kind"] = to_string(g.kind);
    gj["quota"] = g.quota;
    j["groups"].push_back(gj);
  }
  return j.dump(2);
}

DatasetSpec spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("spec json: ") + e.what());
  }
  DatasetSpec spec;
  spec.d = j.at("d").get<int>();
  spec.k = j.at("k").get<int>();
  spec.n = j.at("n").get<int>();
  spec.num_classes = j.at("num_classes").get<int>();
  spec.sigma = j.at("sigma").get<double>();
  spec.mislabel_fraction = j.at("mislabel_fraction").get<double>();
  spec.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  spec.rare_count = j.value("rare_count", 1);
  spec.balanced = j.value("balanced", false);
  spec.mislabel_from_rare = j.value("mislabel_from_rare", false);
  spec.mislabel_split_a = j.value("mislabel_split_a", true);
  spec.mislabel_split_b = j.value("mislabel_split_b", true);
  for (const auto& gj : j.at("groups")) {
    GroupSpec g;
    g.group_id = gj.at("group_id").get<int>();
    g.label = gj.at("label").get<int>();
    const auto indices = gj.at("signal_indices").get<std::vector<int>>();
    if (static_cast<int>(indices.size()) != spec.k)
      throw ConfigError("spec json: signal_indices size mismatch");
    g.support_begin = indices.empty() ? 0 : indices.front();
    for (std::size_t i = 1; i < indices.size(); ++i)
      if (indices[i] != indices[i - 1] + 1)
        throw ConfigError("spec json: signal_indices must be consecutive");
    g.coordinate_mean = gj.at("coordinate_mean").get<double>();
    g.frequency = gj.at("frequency").get<double>();
    g.kind = kind_from_string(gj.at("kind").get<std::string>());
    g.quota = gj.value("quota", -1);
    spec.groups.push_back(g);
  }
  validate_spec(spec);
  return spec;
}

}  // namespace ssft
