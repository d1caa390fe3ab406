#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssft/stats.hpp"
#include "ssft/svm.hpp"

namespace ssft {

// ---------------------------------------------------------------------------
// Regime assumptions
// ---------------------------------------------------------------------------

// Advisory check of the overparametrized-regime conditions:
//   a1: 0 <= delta <= 1/C
//   a2: n >= C log(1/delta)
//   a3: d >= C max{n^2 log(n/delta), n k mu^2 / sigma^2}
//       and k mu^2 / sigma^2 >= C log(n/delta)
// Margins are "value minus requirement"; negative means violated.
struct AssumptionReport {
  double delta = 0.05;
  double big_c = 10.0;
  int n = 0;
  int d = 0;
  int k = 0;
  double mu = 0.0;
  double sigma = 1.0;
  bool a1_ok = false;
  bool a2_ok = false;
  bool a3_ok = false;
  double a1_margin = 0.0;
  double a2_margin = 0.0;
  double a3_dim_margin = 0.0;
  double a3_snr_margin = 0.0;
};

AssumptionReport check_assumptions(int n, int d, int k, double mu,
                                   double sigma, double delta, double big_c);

// ---------------------------------------------------------------------------
// Binary two-majority-group instances
// ---------------------------------------------------------------------------

// Layout used by every suite in this module: group 1 (+1) owns coordinates
// [0, k), group 2 (-1) owns [k, 2k), the rare group (+1) owns [2k, 3k).
struct BinaryInstanceParams {
  int d = 500;
  int k = 25;
  int n = 100;
  double mu = 1.0;
  double sigma = 1.0;
};

struct BinaryInstance {
  std::vector<std::vector<double>> x;
  std::vector<int> y;      // +/-1 given labels
  std::vector<int> group;  // 1, 2, or 3 (rare)
  int mislabeled_index = -1;
  int rare_index = -1;
};

// Clean balanced draw from the two majority groups (the second-split shape).
BinaryInstance sample_majority_instance(const BinaryInstanceParams& p,
                                        std::uint64_t seed,
                                        double mean_divisor = 1.0);

// First-split shape: balanced majority examples plus exactly one mislabeled
// point (majority group 1, label flipped) and one rare point (group 3).
BinaryInstance sample_first_split_instance(const BinaryInstanceParams& p,
                                           std::uint64_t seed);

// One fresh point from `group_id` with the majority mean divided by
// `mean_divisor`; `label` is the given label to attach.
struct ProbePoint {
  std::vector<double> x;
  int label = 1;
};
ProbePoint sample_probe(const BinaryInstanceParams& p, int group_id, int label,
                        std::uint64_t seed, double mean_divisor = 1.0);

// ---------------------------------------------------------------------------
// Gradient-descent direction convergence
// ---------------------------------------------------------------------------

struct ImplicitBiasResult {
  double cosine = 0.0;             // cos(w(T), svm direction)
  SvmSolution svm;
  std::vector<double> w;           // final iterate
  std::vector<long> checkpoints;   // log-spaced iteration counts
  std::vector<double> cosine_trace;
  std::vector<double> residual_norm_trace;  // ||w(t) - svm_w * log t||
};

// Full-batch gradient descent on the summed exponential loss from a small
// random init (std 0.01, seeded), compared against the max-margin direction.
ImplicitBiasResult implicit_bias_check(
    const std::vector<std::vector<double>>& points,
    const std::vector<int>& labels, double eta, long iterations,
    std::uint64_t init_seed, const SvmOptions& svm_options = {});

// ---------------------------------------------------------------------------
// Weight-update decomposition over the second split
// ---------------------------------------------------------------------------

// Running full-batch exponential-loss GD from w0, the weight change
// decomposes exactly as w(t) - w0 = sum_j beta_j(t) y_j x_j with
// beta_j(t) = eta * sum_{s<t} exp(-y_j w(s).x_j) >= 0. delta_fraction is
// the share of total beta mass on `group_one` members per logged epoch.
struct RepresenterTraceResult {
  std::vector<double> beta;
  std::vector<int> logged_epochs;
  std::vector<double> delta_fraction;
  double max_reconstruction_error = 0.0;  // relative to 1 + ||w(t)||
  bool all_nonnegative = true;
  std::vector<double> w;  // final iterate
};

RepresenterTraceResult representer_trace(
    const std::vector<std::vector<double>>& points,
    const std::vector<int>& labels, const std::vector<bool>& group_one,
    const std::vector<double>& w0, double eta, int epochs, int log_every = 1);

// ---------------------------------------------------------------------------
// Long-horizon forgetting frequencies
// ---------------------------------------------------------------------------

struct AsymptoticTrialOutcome {
  int trial = 0;
  bool separable = true;
  bool mislabeled_retained = false;  // still predicted with the given label
  bool rare_misclassified = false;
  bool complex_misclassified = false;
};

struct AsymptoticParams {
  BinaryInstanceParams instance;
  double complex_divisor = 1.25;  // majority mean shrink for the complex variant
  int trials = 200;
  std::uint64_t seed = 1;
  int jobs = 0;  // 0 = hardware concurrency
  SvmOptions svm;
};

// Per trial: solve the max-margin problem on a fresh clean second split and
// evaluate fresh probe points against it; the complex variant repeats this
// with the majority means divided by `complex_divisor`. Non-separable draws
// are discarded and counted.
struct AsymptoticReport {
  AsymptoticParams params;
  AssumptionReport assumptions;
  FrequencyEstimate mislabeled_retention;
  FrequencyEstimate rare_misclassification;
  FrequencyEstimate complex_misclassification;
  int discarded_non_separable = 0;
  std::vector<AsymptoticTrialOutcome> outcomes;
};

AsymptoticReport asymptotic_forgetting_trial(const AsymptoticParams& params);

// ---------------------------------------------------------------------------
// Intermediate-epoch window
// ---------------------------------------------------------------------------

struct WindowTrialOutcome {
  int trial = 0;
  bool separable = true;       // first phase reached unit margin
  bool window_found = false;   // an epoch with mislabeled wrong, rare right
  int window_start = 0;        // first such epoch (1-based), 0 if none
  int window_length = 0;       // contiguous run; censored at the horizon
  bool window_censored = false;
  int mislabeled_flip_epoch = 0;  // 0 = never within horizon
  int rare_flip_epoch = 0;
};

struct WindowParams {
  BinaryInstanceParams instance{1000, 25, 100, 1.5, 1.0};
  double eta_a = 5e-4;
  double eta_b = 5e-4;
  long max_iterations_a = 200000;
  int max_epochs_b = 3000;
  int trials = 100;
  std::uint64_t seed = 1;
  int jobs = 0;
};

struct WindowReport {
  WindowParams params;
  AssumptionReport assumptions;
  int separable_trials = 0;
  FrequencyEstimate window_fraction;      // over separable trials
  FrequencyEstimate flip_order_fraction;  // mislabeled before rare, where both flip
  int both_flipped = 0;
  std::vector<WindowTrialOutcome> outcomes;
};

// Runs the two-phase protocol per trial (first phase to unit margin, second
// phase on a clean split) and scans second-phase epochs for a window where
// the mislabeled probe is predicted against its given label while the rare
// probe is still predicted correctly.
WindowReport intermediate_window_trial(const WindowParams& params);

// JSON / CSV emission for the reports above.
std::string to_json(const AssumptionReport& r);
std::string to_json(const AsymptoticReport& r);
std::string to_json(const WindowReport& r);
std::string outcomes_csv(const AsymptoticReport& r);
std::string outcomes_csv(const WindowReport& r);

}  // namespace ssft
