#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ssft/rng.hpp"

namespace ssft {

enum class GroupKind { kTypical, kRare, kComplex };
enum class Provenance { kClean, kMislabeled, kRare, kComplex };
enum class SplitId { kA, kB };

const char* to_string(GroupKind k);
const char* to_string(Provenance p);
const char* to_string(SplitId s);

// One component of the group mixture. Every group owns a block of `k`
// consecutive feature coordinates (disjoint from all other groups); samples
// are that block's mean vector plus isotropic Gaussian noise.
struct GroupSpec {
  int group_id = 0;
  int label = 0;
  int support_begin = 0;   // signal indices are [support_begin, support_begin + k)
  double coordinate_mean = 0.0;  // per-coordinate signal magnitude on the block
  double frequency = 0.0;        // sampling probability (0 for rare groups)
  GroupKind kind = GroupKind::kTypical;
  // Exact per-split sample quota. -1 means frequency-driven sampling;
  // rare groups always use `DatasetSpec::rare_count` in split A and 0 in B.
  int quota = -1;
};

struct DatasetSpec {
  int d = 0;            // feature dimension
  int k = 0;            // signal coordinates per group
  int n = 0;            // examples per split
  int num_classes = 0;
  double sigma = 1.0;   // noise standard deviation
  double mislabel_fraction = 0.0;
  std::uint64_t rng_seed = 0;
  std::vector<GroupSpec> groups;

  int rare_count = 1;           // rare-group examples injected into split A
  bool balanced = false;        // exact per-group quotas instead of sampling
  bool mislabel_from_rare = false;  // flip labels on rare groups instead of typical
  bool mislabel_split_a = true;
  bool mislabel_split_b = true;

  const GroupSpec& group(int group_id) const { return groups.at(group_id); }
};

struct Example {
  int example_id = 0;
  std::vector<double> features;
  int given_label = 0;
  int true_label = 0;
  int group_id = 0;
  Provenance provenance = Provenance::kClean;
  SplitId split = SplitId::kA;
};

struct SplitPair {
  std::vector<Example> a;
  std::vector<Example> b;
};

// Compact generator parameters for the standard mixture layout: one typical
// group per class, then complex groups (signal mean divided by
// `complex_lambda`) and rare groups cycling over the classes.
struct MixtureParams {
  int d = 500;
  int k = 5;
  int n = 100;
  int num_classes = 10;
  double sigma = 1.0;
  double mu_typical = 5.0;
  double complex_lambda = 1.25;
  int typical_groups = 10;
  int complex_groups = 0;
  int rare_groups = 0;
  double typical_mass = 1.0;  // total frequency on typical groups; rest on complex
  double mislabel_fraction = 0.0;
  int rare_count = 1;
  bool balanced = false;
  bool mislabel_from_rare = false;
  bool mislabel_split_a = true;
  bool mislabel_split_b = true;
  std::uint64_t rng_seed = 1;
};

// Validates parameters and lays out disjoint consecutive signal blocks
// (group g gets coordinates [g*k, (g+1)*k)). Throws ConfigError on
// support overflow or invalid frequencies.
DatasetSpec build_spec(const MixtureParams& params);

// Long-tailed layout: `num_superclasses` labels, each backed by
// `subgroup_sizes.size()` groups sharing the label but with distinct signal
// blocks. Realized per-split counts are floor(size * scale); the
// size-to-subgroup assignment is shuffled per seed.
struct ZipfParams {
  int num_superclasses = 20;
  std::vector<int> subgroup_sizes = {500, 250, 125, 64, 32};
  double scale = 0.1;
  int k = 5;
  int d = 0;  // 0 = smallest dimension that fits all supports
  double sigma = 1.0;
  double mu = 5.0;
  double mislabel_fraction = 0.0;
  std::uint64_t rng_seed = 1;
};

DatasetSpec build_zipf_spec(const ZipfParams& params);

// Draws both splits. Deterministic given spec.rng_seed: group assignment,
// per-example noise, and label flips each use their own substream.
SplitPair sample_splits(const DatasetSpec& spec);

// Fresh evaluation sample: `count` examples drawn from the frequency-bearing
// groups with mislabel_fraction forced to 0. Used as the clean test set.
std::vector<Example> sample_eval_set(const DatasetSpec& spec, int count,
                                     std::uint64_t seed);

// CSV dump: example_id,group_id,true_label,given_label,provenance,x_0,...
void write_split_csv(std::ostream& out, const std::vector<Example>& split);
std::vector<Example> read_split_csv(std::istream& in);

std::string spec_to_json(const DatasetSpec& spec);
DatasetSpec spec_from_json(const std::string& text);

}  // namespace ssft
