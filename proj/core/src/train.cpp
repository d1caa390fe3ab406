#include "ssft/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ssft/errors.hpp"
#include "ssft/rng.hpp"

namespace ssft {

const char* to_string(LossKind k) {
  return k == LossKind::kExponential ? "exponential" : "softmax_cross_entropy";
}
const char* to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kFullBatchGd: return "gd";
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kAdam: return "adam";
  }
  return "?";
}
const char* to_string(ConvergenceRule r) {
  return r == ConvergenceRule::kMarginOne ? "margin_one" : "stable_accuracy";
}

LossKind loss_from_string(const std::string& s) {
  if (s == "exponential") return LossKind::kExponential;
  if (s == "softmax_cross_entropy" || s == "softmax")
    return LossKind::kSoftmaxCrossEntropy;
  throw ConfigError("unknown loss: " + s);
}
OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "gd") return OptimizerKind::kFullBatchGd;
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer: " + s);
}
ConvergenceRule convergence_from_string(const std::string& s) {
  if (s == "margin_one") return ConvergenceRule::kMarginOne;
  if (s == "stable_accuracy") return ConvergenceRule::kStableAccuracy;
  throw ConfigError("unknown convergence rule: " + s);
}

namespace {

// Adds the per-example loss gradient (scaled by `scale`) into `grad`;
// returns the example's loss.
double accumulate_gradient(const LinearModel& model, const Example& ex,
                           LossKind loss, double scale,
                           std::vector<double>& grad) {
  const std::span<const double> x(ex.features);
  if (loss == LossKind::kExponential) {
    const double ysgn = label_sign(ex.given_label);
    const double margin = ysgn * model.binary_score(x);
    const double weight = std::exp(-margin);
    // d/dw exp(-y w.x) = -exp(-y w.x) y x
    for (int j = 0; j < model.dim; ++j)
      grad[static_cast<std::size_t>(j)] -= scale * weight * ysgn * ex.features[static_cast<std::size_t>(j)];
    return weight;
  }

  std::vector<double> s(static_cast<std::size_t>(model.num_classes));
  model.scores(x, s);
  double max_s = s[0];
  for (double v : s) max_s = std::max(max_s, v);
  double denom = 0.0;
  for (double& v : s) {
    v = std::exp(v - max_s);
    denom += v;
  }
  for (int c = 0; c < model.num_classes; ++c) {
    const double p = s[static_cast<std::size_t>(c)] / denom;
    const double coeff =
        scale * (p - (c == ex.given_label ? 1.0 : 0.0));
    double* row = grad.data() + static_cast<std::size_t>(c) * model.dim;
    for (int j = 0; j < model.dim; ++j)
      row[static_cast<std::size_t>(j)] += coeff * ex.features[static_cast<std::size_t>(j)];
  }
  const double p_given = s[static_cast<std::size_t>(ex.given_label)] / denom;
  return -std::log(std::max(p_given, 1e-300));
}

void apply_weight_decay(const LinearModel& model, const TrainConfig& cfg,
                        std::vector<double>& grad) {
  if (cfg.weight_decay == 0.0) return;
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] += cfg.weight_decay * model.weights[i];
}

double batch_gradient(const LinearModel& model,
                      std::span<const Example* const> batch,
                      const TrainConfig& cfg, std::vector<double>& grad) {
  grad.assign(model.weights.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const Example* ex : batch)
    loss += scale * accumulate_gradient(model, *ex, cfg.loss, scale, grad);
  apply_weight_decay(model, cfg, grad);
  return loss;
}

}  // namespace

void sgd_step(LinearModel& model, std::span<const Example* const> batch,
              const TrainConfig& cfg, std::vector<double>& velocity) {
  if (batch.empty()) throw ConfigError("sgd_step: empty batch");
  std::vector<double> grad;
  batch_gradient(model, batch, cfg, grad);
  if (cfg.momentum != 0.0) {
    if (velocity.size() != grad.size()) velocity.assign(grad.size(), 0.0);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      velocity[i] = cfg.momentum * velocity[i] + grad[i];
      model.weights[i] -= cfg.learning_rate * velocity[i];
    }
  } else {
    for (std::size_t i = 0; i < grad.size(); ++i)
      model.weights[i] -= cfg.learning_rate * grad[i];
  }
}

void adam_step(LinearModel& model, std::span<const Example* const> batch,
               const TrainConfig& cfg, AdamState& state) {
  if (batch.empty()) throw ConfigError("adam_step: empty batch");
  std::vector<double> grad;
  batch_gradient(model, batch, cfg, grad);
  if (state.first_moment.size() != grad.size()) state.reset(grad.size());
  state.step += 1;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * grad[i];
    state.second_moment[i] =
        b2 * state.second_moment[i] + (1.0 - b2) * grad[i] * grad[i];
    const double m_hat = state.first_moment[i] / bias1;
    const double v_hat = state.second_moment[i] / bias2;
    model.weights[i] -=
        cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
  }
}

double full_batch_gd_step(LinearModel& model, const std::vector<Example>& data,
                          const TrainConfig& cfg) {
  if (data.empty()) throw ConfigError("full_batch_gd_step: empty data");
  std::vector<double> grad(model.weights.size(), 0.0);
  double loss = 0.0;
  for (const Example& ex : data)
    loss += accumulate_gradient(model, ex, cfg.loss, 1.0, grad);
  apply_weight_decay(model, cfg, grad);
  for (std::size_t i = 0; i < grad.size(); ++i)
    model.weights[i] -= cfg.learning_rate * grad[i];
  return loss;
}

double total_loss(const LinearModel& model, const std::vector<Example>& data,
                  LossKind loss) {
  double acc = 0.0;
  for (const Example& ex : data) {
    if (loss == LossKind::kExponential) {
      acc += std::exp(-label_sign(ex.given_label) *
                      model.binary_score(ex.features));
    } else {
      acc += -std::log(std::max(model.confidence(ex.features, ex.given_label),
                                1e-300));
    }
  }
  return acc;
}

double min_signed_margin(const LinearModel& model,
                         const std::vector<Example>& data) {
  double m = std::numeric_limits<double>::infinity();
  for (const Example& ex : data)
    m = std::min(m, label_sign(ex.given_label) * model.binary_score(ex.features));
  return m;
}

double split_accuracy(const LinearModel& model,
                      const std::vector<Example>& data) {
  if (data.empty()) return 1.0;
  int correct = 0;
  for (const Example& ex : data)
    if (model.predict(ex.features) == ex.given_label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

struct HistoryBuilder {
  std::vector<std::uint8_t> correct_cols;  // column-major [epoch][example]
  std::vector<double> confidence_cols;
  std::size_t tracked = 0;
  int columns = 0;

  void evaluate(const LinearModel& model,
                const std::vector<const Example*>& examples) {
    for (const Example* ex : examples) {
      correct_cols.push_back(model.predict(ex->features) == ex->given_label ? 1
                                                                            : 0);
      confidence_cols.push_back(model.confidence(ex->features, ex->given_label));
    }
    ++columns;
  }

  PredictionHistory finalize(SplitId phase,
                             const std::vector<const Example*>& examples) const {
    PredictionHistory h;
    h.phase = phase;
    h.epochs = columns - 1;
    h.example_ids.reserve(examples.size());
    for (const Example* ex : examples) h.example_ids.push_back(ex->example_id);
    const std::size_t stride = static_cast<std::size_t>(columns);
    h.correct.resize(examples.size() * stride);
    h.confidence.resize(examples.size() * stride);
    for (std::size_t t = 0; t < stride; ++t) {
      for (std::size_t i = 0; i < examples.size(); ++i) {
        h.correct[i * stride + t] = correct_cols[t * examples.size() + i];
        h.confidence[i * stride + t] = confidence_cols[t * examples.size() + i];
      }
    }
    return h;
  }
};

}  // namespace

PhaseResult train_phase(const LinearModel& init,
                        const std::vector<Example>& data,
                        const std::vector<const Example*>& tracked,
                        const TrainConfig& cfg, SplitId phase) {
  if (cfg.learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (cfg.loss == LossKind::kExponential && !init.binary)
    throw ConfigError("exponential loss requires the binary model layout");
  if (cfg.convergence == ConvergenceRule::kMarginOne &&
      cfg.loss != LossKind::kExponential)
    throw ConfigError("margin_one convergence applies to the binary exponential mode");

  LinearModel model = init;
  HistoryBuilder hist;
  hist.tracked = tracked.size();
  hist.evaluate(model, tracked);  // column 0: before any update this phase

  std::vector<double> velocity;
  AdamState adam;
  double prev_loss = std::numeric_limits<double>::infinity();
  int rising_epochs = 0;
  int stable_count = 0;
  bool converged = false;
  int epoch = 0;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (epoch = 1; epoch <= cfg.max_epochs && !data.empty(); ++epoch) {
    if (cfg.optimizer == OptimizerKind::kFullBatchGd) {
      const double loss = full_batch_gd_step(model, data, cfg);
      if (!std::isfinite(loss))
        throw DivergenceError("full-batch loss is not finite; lower the learning rate");
      if (loss > prev_loss) {
        if (++rising_epochs >= 5)
          throw DivergenceError(
              "full-batch loss increased for 5 consecutive epochs; lower the learning rate");
      } else {
        rising_epochs = 0;
      }
      prev_loss = loss;
    } else {
      // One pass over the split in a freshly shuffled order.
      Rng shuffler = Rng::from_path(
          cfg.rng_seed,
          {stream::kEpochShuffle, static_cast<std::uint64_t>(phase == SplitId::kA ? 0 : 1),
           static_cast<std::uint64_t>(epoch)});
      shuffler.shuffle(order);
      const int bs = std::max(1, cfg.batch_size);
      std::vector<const Example*> batch;
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(bs)) {
        batch.clear();
        const std::size_t stop =
            std::min(order.size(), start + static_cast<std::size_t>(bs));
        for (std::size_t i = start; i < stop; ++i)
          batch.push_back(&data[order[i]]);
        if (cfg.optimizer == OptimizerKind::kSgd)
          sgd_step(model, batch, cfg, velocity);
        else
          adam_step(model, batch, cfg, adam);
      }
    }

    hist.evaluate(model, tracked);

    if (cfg.convergence == ConvergenceRule::kMarginOne) {
      if (min_signed_margin(model, data) >= 1.0) {
        converged = true;
        break;
      }
    } else {
      if (split_accuracy(model, data) >= 1.0) {
        if (++stable_count >= cfg.stable_epochs) {
          converged = true;
          break;
        }
      } else {
        stable_count = 0;
      }
    }
  }

  PhaseResult result;
  result.history = hist.finalize(phase, tracked);
  result.model = std::move(model);
  result.converged = converged;
  result.epochs_run = result.history.epochs;
  return result;
}

PhaseResult train_phase(const LinearModel& init,
                        const std::vector<Example>& data,
                        const std::vector<Example>& tracked,
                        const TrainConfig& cfg, SplitId phase) {
  std::vector<const Example*> ptrs;
  ptrs.reserve(tracked.size());
  for (const Example& ex : tracked) ptrs.push_back(&ex);
  return train_phase(init, data, ptrs, cfg, phase);
}

LinearModel init_model(const DatasetSpec& spec, const TrainConfig& cfg) {
  LinearModel model =
      (spec.num_classes == 2 && cfg.loss == LossKind::kExponential)
          ? LinearModel::make_binary(spec.d)
          : LinearModel::make_multiclass(spec.num_classes, spec.d);
  Rng rng = Rng::from_path(cfg.rng_seed, {stream::kModelInit});
  rng.fill_normal(model.weights, 0.0, 0.01);
  return model;
}

TwoSplitResult two_split_run(const DatasetSpec& spec, const TrainConfig& cfg_a,
                             const TrainConfig& cfg_b, bool track_b_during_b) {
  TwoSplitResult result;
  result.spec = spec;
  SplitPair splits = sample_splits(spec);
  result.split_a = std::move(splits.a);
  result.split_b = std::move(splits.b);

  const LinearModel init = init_model(spec, cfg_a);

  PhaseResult phase_a =
      train_phase(init, result.split_a, result.split_a, cfg_a, SplitId::kA);
  result.history_a = std::move(phase_a.history);
  result.model_a = std::move(phase_a.model);
  result.a_converged = phase_a.converged;

  std::vector<const Example*> tracked;
  for (const Example& ex : result.split_a) tracked.push_back(&ex);
  if (track_b_during_b)
    for (const Example& ex : result.split_b) tracked.push_back(&ex);

  PhaseResult phase_b =
      train_phase(result.model_a, result.split_b, tracked, cfg_b, SplitId::kB);
  if (track_b_during_b) {
    result.history_b = phase_b.history.slice(0, result.split_a.size());
    result.history_b_self =
        phase_b.history.slice(result.split_a.size(), result.split_b.size());
  } else {
    result.history_b = std::move(phase_b.history);
  }
  result.model_b = std::move(phase_b.model);
  result.b_converged = phase_b.converged;
  return result;
}

}  // namespace ssft
