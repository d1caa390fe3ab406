#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ssft/datagen.hpp"
#include "ssft/model.hpp"

namespace ssft {

enum class LossKind { kExponential, kSoftmaxCrossEntropy };
enum class OptimizerKind { kFullBatchGd, kSgd, kAdam };
enum class ConvergenceRule { kMarginOne, kStableAccuracy };

const char* to_string(LossKind k);
const char* to_string(OptimizerKind k);
const char* to_string(ConvergenceRule r);
LossKind loss_from_string(const std::string& s);
OptimizerKind optimizer_from_string(const std::string& s);
ConvergenceRule convergence_from_string(const std::string& s);

struct TrainConfig {
  LossKind loss = LossKind::kSoftmaxCrossEntropy;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  double learning_rate = 0.1;
  int batch_size = 10;
  int max_epochs = 100;
  ConvergenceRule convergence = ConvergenceRule::kStableAccuracy;
  int stable_epochs = 5;  // consecutive 100%-accuracy epochs before stopping
  double weight_decay = 0.0;
  double momentum = 0.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t rng_seed = 1;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long step = 0;

  void reset(std::size_t size) {
    first_moment.assign(size, 0.0);
    second_moment.assign(size, 0.0);
    step = 0;
  }
};

// Mean-gradient minibatch updates. Momentum and weight decay apply when set
// in the config; Adam uses bias-corrected moment estimates.
void sgd_step(LinearModel& model, std::span<const Example* const> batch,
              const TrainConfig& cfg, std::vector<double>& velocity);
void adam_step(LinearModel& model, std::span<const Example* const> batch,
               const TrainConfig& cfg, AdamState& state);

// One full-batch gradient step over `data` with summed gradients
// (w <- w - eta * grad of total loss). Returns the loss before the step.
double full_batch_gd_step(LinearModel& model, const std::vector<Example>& data,
                          const TrainConfig& cfg);

double total_loss(const LinearModel& model, const std::vector<Example>& data,
                  LossKind loss);
double min_signed_margin(const LinearModel& model,
                         const std::vector<Example>& data);
double split_accuracy(const LinearModel& model,
                      const std::vector<Example>& data);

struct PhaseResult {
  LinearModel model;
  PredictionHistory history;
  bool converged = false;
  int epochs_run = 0;
};

// Trains on `data` until the convergence rule fires or max_epochs is hit,
// evaluating every tracked example at the end of each epoch (plus the
// pre-update state as column 0). `tracked` may include examples that are
// not part of `data`. Throws DivergenceError if the full-batch loss rises
// for `stable_epochs` consecutive epochs or becomes non-finite.
PhaseResult train_phase(const LinearModel& init,
                        const std::vector<Example>& data,
                        const std::vector<const Example*>& tracked,
                        const TrainConfig& cfg, SplitId phase);

PhaseResult train_phase(const LinearModel& init,
                        const std::vector<Example>& data,
                        const std::vector<Example>& tracked,
                        const TrainConfig& cfg, SplitId phase);

// Fresh Gaussian initialization (std 0.01) on the model layout the spec
// calls for: binary when num_classes == 2 and the loss is exponential.
LinearModel init_model(const DatasetSpec& spec, const TrainConfig& cfg);

struct TwoSplitResult {
  DatasetSpec spec;
  std::vector<Example> split_a;
  std::vector<Example> split_b;
  PredictionHistory history_a;       // split-A examples during phase A
  PredictionHistory history_b;       // split-A examples during phase B
  std::optional<PredictionHistory> history_b_self;  // split-B during phase B
  LinearModel model_a;
  LinearModel model_b;
  bool a_converged = false;
  bool b_converged = false;
};

// The two-phase protocol: train from random init on split A tracking split
// A, then continue from those weights on split B while still tracking split
// A (optionally split B as well). Deterministic given spec and config seeds.
TwoSplitResult two_split_run(const DatasetSpec& spec, const TrainConfig& cfg_a,
                             const TrainConfig& cfg_b,
                             bool track_b_during_b = false);

}  // namespace ssft
