#include "ssft/theory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "ssft/csv.hpp"
#include "ssft/errors.hpp"
#include "ssft/linalg.hpp"
#include "ssft/pool.hpp"
#include "ssft/rng.hpp"

namespace ssft {

AssumptionReport check_assumptions(int n, int d, int k, double mu,
                                   double sigma, double delta, double big_c) {
  if (n <= 0 || d <= 0 || k <= 0 || sigma <= 0.0 || big_c <= 0.0)
    throw ConfigError("check_assumptions: parameters must be positive");
  AssumptionReport r;
  r.delta = delta;
  r.big_c = big_c;
  r.n = n;
  r.d = d;
  r.k = k;
  r.mu = mu;
  r.sigma = sigma;

  r.a1_margin = 1.0 / big_c - delta;
  r.a1_ok = delta >= 0.0 && r.a1_margin >= 0.0;

  const double log_inv_delta = std::log(1.0 / delta);
  r.a2_margin = static_cast<double>(n) - big_c * log_inv_delta;
  r.a2_ok = r.a2_margin >= 0.0;

  const double snr = k * mu * mu / (sigma * sigma);
  const double log_n_delta = std::log(static_cast<double>(n) / delta);
  const double dim_requirement =
      big_c * std::max(static_cast<double>(n) * n * log_n_delta,
                       static_cast<double>(n) * snr);
  r.a3_dim_margin = static_cast<double>(d) - dim_requirement;
  r.a3_snr_margin = snr - big_c * log_n_delta;
  r.a3_ok = r.a3_dim_margin >= 0.0 && r.a3_snr_margin >= 0.0;
  return r;
}

namespace {

// Group g's signal block is [(g-1)*k, g*k).
void add_signal(std::vector<double>& x, int group_id, int k, double mean) {
  const int begin = (group_id - 1) * k;
  for (int j = begin; j < begin + k; ++j)
    x[static_cast<std::size_t>(j)] += mean;
}

std::vector<double> draw_point(const BinaryInstanceParams& p, int group_id,
                               double mean, Rng& rng) {
  std::vector<double> x(static_cast<std::size_t>(p.d));
  rng.fill_normal(x, 0.0, p.sigma);
  add_signal(x, group_id, p.k, mean);
  return x;
}

void validate_binary_params(const BinaryInstanceParams& p, int groups_needed) {
  if (p.d <= 0 || p.k <= 0 || p.n <= 1 || p.sigma <= 0.0)
    throw ConfigError("binary instance: d, k, sigma positive and n > 1");
  if (p.k * groups_needed > p.d)
    throw ConfigError("binary instance: signal blocks exceed dimension");
}

}  // namespace

BinaryInstance sample_majority_instance(const BinaryInstanceParams& p,
                                        std::uint64_t seed,
                                        double mean_divisor) {
  validate_binary_params(p, 2);
  BinaryInstance inst;
  Rng rng = Rng::from_path(seed, {stream::kNoise});
  const double mean = p.mu / mean_divisor;
  for (int i = 0; i < p.n; ++i) {
    const int group = i < p.n / 2 ? 1 : 2;
    inst.x.push_back(draw_point(p, group, mean, rng));
    inst.y.push_back(group == 1 ? 1 : -1);
    inst.group.push_back(group);
  }
  return inst;
}

BinaryInstance sample_first_split_instance(const BinaryInstanceParams& p,
                                           std::uint64_t seed) {
  validate_binary_params(p, 3);
  if (p.n < 4) throw ConfigError("first-split instance needs n >= 4");
  BinaryInstance inst;
  Rng rng = Rng::from_path(seed, {stream::kNoise, 1});
  const int clean = p.n - 2;
  for (int i = 0; i < clean; ++i) {
    const int group = i < clean / 2 ? 1 : 2;
    inst.x.push_back(draw_point(p, group, p.mu, rng));
    inst.y.push_back(group == 1 ? 1 : -1);
    inst.group.push_back(group);
  }
  // One mislabeled majority point: drawn from group 1, labeled as group 2.
  inst.mislabeled_index = static_cast<int>(inst.x.size());
  inst.x.push_back(draw_point(p, 1, p.mu, rng));
  inst.y.push_back(-1);
  inst.group.push_back(1);
  // One rare point with its own signal block, absent from the second split.
  inst.rare_index = static_cast<int>(inst.x.size());
  inst.x.push_back(draw_point(p, 3, p.mu, rng));
  inst.y.push_back(1);
  inst.group.push_back(3);
  return inst;
}

ProbePoint sample_probe(const BinaryInstanceParams& p, int group_id, int label,
                        std::uint64_t seed, double mean_divisor) {
  validate_binary_params(p, group_id);
  Rng rng = Rng::from_path(seed, {stream::kNoise, 2, static_cast<std::uint64_t>(group_id)});
  ProbePoint probe;
  probe.x = draw_point(p, group_id, p.mu / mean_divisor, rng);
  probe.label = label;
  return probe;
}

namespace {

double exp_loss_and_gradient(const std::vector<std::vector<double>>& x,
                             const std::vector<int>& y,
                             const std::vector<double>& w,
                             std::vector<double>& grad) {
  grad.assign(w.size(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double margin = y[i] * dot(w, x[i]);
    const double e = std::exp(-margin);
    loss += e;
    axpy(-e * y[i], x[i], grad);
  }
  return loss;
}

// Full-batch descent with the divergence guard shared across the library.
// Returns the number of iterations actually run.
template <typename PerStep>
long run_exp_gd(const std::vector<std::vector<double>>& x,
                const std::vector<int>& y, std::vector<double>& w, double eta,
                long max_iterations, PerStep&& per_step) {
  std::vector<double> grad;
  double prev_loss = std::numeric_limits<double>::infinity();
  int rising = 0;
  for (long t = 1; t <= max_iterations; ++t) {
    const double loss = exp_loss_and_gradient(x, y, w, grad);
    if (!std::isfinite(loss))
      throw DivergenceError("exponential-loss descent: loss not finite");
    if (loss > prev_loss) {
      if (++rising >= 5)
        throw DivergenceError(
            "exponential-loss descent: loss rose for 5 consecutive steps");
    } else {
      rising = 0;
    }
    prev_loss = loss;
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= eta * grad[j];
    if (per_step(t)) return t;
  }
  return max_iterations;
}

}  // namespace

ImplicitBiasResult implicit_bias_check(
    const std::vector<std::vector<double>>& points,
    const std::vector<int>& labels, double eta, long iterations,
    std::uint64_t init_seed, const SvmOptions& svm_options) {
  ImplicitBiasResult result;
  result.svm = hard_margin_svm(points, labels, svm_options);

  const std::size_t d = points.front().size();
  std::vector<double> w(d);
  Rng init = Rng::from_path(init_seed, {stream::kModelInit});
  init.fill_normal(w, 0.0, 0.01);

  // Log-spaced checkpoints: 1, 2, 4, ... plus the final iterate.
  std::vector<long> marks;
  for (long m = 1; m < iterations; m *= 2) marks.push_back(m);
  if (iterations > 0) marks.push_back(iterations);

  auto record = [&](long t) {
    result.checkpoints.push_back(t);
    result.cosine_trace.push_back(cosine_similarity(w, result.svm.w));
    std::vector<double> residual = w;
    axpy(-std::log(static_cast<double>(t)), result.svm.w, residual);
    result.residual_norm_trace.push_back(norm2(residual));
  };

  if (iterations > 0) {
    std::size_t next_mark = 0;
    run_exp_gd(points, labels, w, eta, iterations, [&](long t) {
      if (next_mark < marks.size() && t == marks[next_mark]) {
        record(t);
        ++next_mark;
      }
      return false;
    });
  }

  result.w = w;
  result.cosine = cosine_similarity(w, result.svm.w);
  return result;
}

RepresenterTraceResult representer_trace(
    const std::vector<std::vector<double>>& points,
    const std::vector<int>& labels, const std::vector<bool>& group_one,
    const std::vector<double>& w0, double eta, int epochs, int log_every) {
  const std::size_t n = points.size();
  if (n == 0) throw ConfigError("representer_trace: empty split");
  if (labels.size() != n || group_one.size() != n)
    throw ConfigError("representer_trace: input sizes disagree");

  RepresenterTraceResult result;
  result.beta.assign(n, 0.0);
  std::vector<double> w = w0;

  auto log_epoch = [&](int t) {
    // Reconstruction check: w(t) - w(0) must equal sum_j beta_j y_j x_j.
    std::vector<double> recon = w0;
    for (std::size_t j = 0; j < n; ++j)
      axpy(result.beta[j] * labels[j], points[j], recon);
    double err = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
      err = std::max(err, std::abs(recon[i] - w[i]));
    const double rel = err / (1.0 + norm2(w));
    result.max_reconstruction_error =
        std::max(result.max_reconstruction_error, rel);
    if (rel > 1e-6)
      throw ReconstructionError(
          "representer_trace: weight decomposition failed to reconstruct");

    double total = 0.0, on_group_one = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (result.beta[j] < 0.0) result.all_nonnegative = false;
      total += result.beta[j];
      if (group_one[j]) on_group_one += result.beta[j];
    }
    result.logged_epochs.push_back(t);
    result.delta_fraction.push_back(total > 0.0 ? on_group_one / total : 0.0);
  };

  for (int t = 1; t <= epochs; ++t) {
    // Accumulate the per-point coefficients with the pre-step weights, then
    // apply exactly the same quantities as the gradient step.
    std::vector<double> contrib(n);
    for (std::size_t j = 0; j < n; ++j)
      contrib[j] = eta * std::exp(-labels[j] * dot(w, points[j]));
    for (std::size_t j = 0; j < n; ++j) {
      result.beta[j] += contrib[j];
      axpy(contrib[j] * labels[j], points[j], w);
    }
    if (t % std::max(1, log_every) == 0 || t == epochs) log_epoch(t);
  }

  result.w = std::move(w);
  return result;
}

AsymptoticReport asymptotic_forgetting_trial(const AsymptoticParams& params) {
  AsymptoticReport report;
  report.params = params;
  report.assumptions =
      check_assumptions(params.instance.n, params.instance.d, params.instance.k,
                        params.instance.mu, params.instance.sigma, 0.05, 10.0);
  report.outcomes.resize(static_cast<std::size_t>(params.trials));

  parallel_for_index(
      static_cast<std::size_t>(params.trials), params.jobs, [&](std::size_t t) {
        AsymptoticTrialOutcome& out = report.outcomes[t];
        out.trial = static_cast<int>(t);
        const std::uint64_t trial_seed = Rng::from_path(
            params.seed, {stream::kTrial, static_cast<std::uint64_t>(t)})
            .next_u64();

        try {
          // Clean second split: probes were never trained on.
          BinaryInstance sb = sample_majority_instance(
              params.instance, trial_seed, 1.0);
          const SvmSolution svm = hard_margin_svm(sb.x, sb.y, params.svm);

          const ProbePoint mis =
              sample_probe(params.instance, 1, -1, trial_seed);
          out.mislabeled_retained = !(dot(svm.w, mis.x) > 0.0);

          const ProbePoint rare =
              sample_probe(params.instance, 3, 1, trial_seed);
          out.rare_misclassified = !(dot(svm.w, rare.x) > 0.0);

          // The complex variant shrinks every majority mean by the divisor.
          BinaryInstance sbc = sample_majority_instance(
              params.instance, trial_seed ^ 0x5a5a5a5a, params.complex_divisor);
          const SvmSolution svm_c = hard_margin_svm(sbc.x, sbc.y, params.svm);
          const ProbePoint complex_probe = sample_probe(
              params.instance, 1, 1, trial_seed ^ 0x5a5a5a5a,
              params.complex_divisor);
          out.complex_misclassified = !(dot(svm_c.w, complex_probe.x) > 0.0);
        } catch (const NonSeparableError&) {
          out.separable = false;
        }
      });

  int kept = 0, retained = 0, rare_wrong = 0, complex_wrong = 0;
  for (const auto& out : report.outcomes) {
    if (!out.separable) {
      ++report.discarded_non_separable;
      continue;
    }
    ++kept;
    retained += out.mislabeled_retained ? 1 : 0;
    rare_wrong += out.rare_misclassified ? 1 : 0;
    complex_wrong += out.complex_misclassified ? 1 : 0;
  }
  report.mislabeled_retention = make_frequency(retained, kept);
  report.rare_misclassification = make_frequency(rare_wrong, kept);
  report.complex_misclassification = make_frequency(complex_wrong, kept);
  return report;
}

WindowReport intermediate_window_trial(const WindowParams& params) {
  WindowReport report;
  report.params = params;
  report.assumptions =
      check_assumptions(params.instance.n, params.instance.d, params.instance.k,
                        params.instance.mu, params.instance.sigma, 0.05, 10.0);
  report.outcomes.resize(static_cast<std::size_t>(params.trials));

  parallel_for_index(
      static_cast<std::size_t>(params.trials), params.jobs, [&](std::size_t t) {
        WindowTrialOutcome& out = report.outcomes[t];
        out.trial = static_cast<int>(t);
        const std::uint64_t trial_seed = Rng::from_path(
            params.seed, {stream::kTrial, static_cast<std::uint64_t>(t)})
            .next_u64();

        BinaryInstance sa =
            sample_first_split_instance(params.instance, trial_seed);
        BinaryInstance sb =
            sample_majority_instance(params.instance, trial_seed ^ 0xb, 1.0);

        std::vector<double> w(static_cast<std::size_t>(params.instance.d));
        Rng init = Rng::from_path(trial_seed, {stream::kModelInit});
        init.fill_normal(w, 0.0, 0.01);

        // First phase: train to unit margin; failure to reach it within the
        // cap is treated as a non-separable draw and discarded.
        bool reached_margin = false;
        run_exp_gd(sa.x, sa.y, w, params.eta_a, params.max_iterations_a,
                   [&](long) {
                     double min_margin =
                         std::numeric_limits<double>::infinity();
                     for (std::size_t i = 0; i < sa.x.size(); ++i)
                       min_margin = std::min(
                           min_margin, sa.y[i] * dot(w, sa.x[i]));
                     if (min_margin >= 1.0) {
                       reached_margin = true;
                       return true;
                     }
                     return false;
                   });
        if (!reached_margin) {
          out.separable = false;
          return;
        }

        const std::vector<double>& x_m =
            sa.x[static_cast<std::size_t>(sa.mislabeled_index)];
        const int y_m = sa.y[static_cast<std::size_t>(sa.mislabeled_index)];
        const std::vector<double>& x_r =
            sa.x[static_cast<std::size_t>(sa.rare_index)];
        const int y_r = sa.y[static_cast<std::size_t>(sa.rare_index)];

        int window_end = 0;
        run_exp_gd(sb.x, sb.y, w, params.eta_b, params.max_epochs_b,
                   [&](long epoch) {
                     const double a_m = y_m * dot(w, x_m);
                     const double a_r = y_r * dot(w, x_r);
                     if (a_m < 0.0 && out.mislabeled_flip_epoch == 0)
                       out.mislabeled_flip_epoch = static_cast<int>(epoch);
                     if (a_r < 0.0 && out.rare_flip_epoch == 0)
                       out.rare_flip_epoch = static_cast<int>(epoch);
                     if (a_m < 0.0 && a_r > 0.0) {
                       if (!out.window_found) {
                         out.window_found = true;
                         out.window_start = static_cast<int>(epoch);
                       }
                       window_end = static_cast<int>(epoch);
                     }
                     // Nothing further can change once both flipped.
                     return out.mislabeled_flip_epoch > 0 &&
                            out.rare_flip_epoch > 0;
                   });
        if (out.window_found) {
          out.window_length = window_end - out.window_start + 1;
          out.window_censored = out.rare_flip_epoch == 0;
        }
      });

  int with_window = 0, both = 0, m_first = 0;
  for (const auto& out : report.outcomes) {
    if (!out.separable) continue;
    ++report.separable_trials;
    with_window += out.window_found ? 1 : 0;
    if (out.mislabeled_flip_epoch > 0 && out.rare_flip_epoch > 0) {
      ++both;
      m_first += out.mislabeled_flip_epoch < out.rare_flip_epoch ? 1 : 0;
    }
  }
  report.both_flipped = both;
  report.window_fraction = make_frequency(with_window, report.separable_trials);
  report.flip_order_fraction = make_frequency(m_first, both);
  return report;
}

namespace {

nlohmann::ordered_json frequency_json(const FrequencyEstimate& e) {
  nlohmann::ordered_json j;
  j["successes"] = e.successes;
  j["trials"] = e.trials;
  j["frequency"] = e.frequency;
  j["wilson_low"] = e.wilson_low;
  j["wilson_high"] = e.wilson_high;
  return j;
}

nlohmann::ordered_json assumptions_json(const AssumptionReport& r) {
  nlohmann::ordered_json j;
  j["delta"] = r.delta;
  j["C"] = r.big_c;
  j["n"] = r.n;
  j["d"] = r.d;
  j["k"] = r.k;
  j["mu"] = r.mu;
  j["sigma"] = r.sigma;
  j["a1_ok"] = r.a1_ok;
  j["a2_ok"] = r.a2_ok;
  j["a3_ok"] = r.a3_ok;
  j["a1_margin"] = r.a1_margin;
  j["a2_margin"] = r.a2_margin;
  j["a3_dim_margin"] = r.a3_dim_margin;
  j["a3_snr_margin"] = r.a3_snr_margin;
  return j;
}

}  // namespace

std::string to_json(const AssumptionReport& r) {
  return assumptions_json(r).dump(2);
}

std::string to_json(const AsymptoticReport& r) {
  nlohmann::ordered_json j;
  j["suite"] = "asymptotic_forgetting";
  j["d"] = r.params.instance.d;
  j["k"] = r.params.instance.k;
  j["n"] = r.params.instance.n;
  j["mu"] = r.params.instance.mu;
  j["sigma"] = r.params.instance.sigma;
  j["complex_divisor"] = r.params.complex_divisor;
  j["trials"] = r.params.trials;
  j["seed"] = r.params.seed;
  j["assumptions"] = assumptions_json(r.assumptions);
  j["mislabeled_retention"] = frequency_json(r.mislabeled_retention);
  j["rare_misclassification"] = frequency_json(r.rare_misclassification);
  j["complex_misclassification"] = frequency_json(r.complex_misclassification);
  j["discarded_non_separable"] = r.discarded_non_separable;
  return j.dump(2);
}

std::string to_json(const WindowReport& r) {
  nlohmann::ordered_json j;
  j["suite"] = "intermediate_window";
  j["d"] = r.params.instance.d;
  j["k"] = r.params.instance.k;
  j["n"] = r.params.instance.n;
  j["mu"] = r.params.instance.mu;
  j["sigma"] = r.params.instance.sigma;
  j["eta_a"] = r.params.eta_a;
  j["eta_b"] = r.params.eta_b;
  j["max_epochs_b"] = r.params.max_epochs_b;
  j["trials"] = r.params.trials;
  j["seed"] = r.params.seed;
  j["assumptions"] = assumptions_json(r.assumptions);
  j["separable_trials"] = r.separable_trials;
  j["window_fraction"] = frequency_json(r.window_fraction);
  j["both_flipped"] = r.both_flipped;
  j["flip_order_fraction"] = frequency_json(r.flip_order_fraction);
  return j.dump(2);
}

std::string outcomes_csv(const AsymptoticReport& r) {
  std::ostringstream out;
  out << "trial,separable,mislabeled_retained,rare_misclassified,"
         "complex_misclassified\n";
  for (const auto& o : r.outcomes)
    out << o.trial << ',' << (o.separable ? 1 : 0) << ','
        << (o.mislabeled_retained ? 1 : 0) << ','
        << (o.rare_misclassified ? 1 : 0) << ','
        << (o.complex_misclassified ? 1 : 0) << '\n';
  return out.str();
}

std::string outcomes_csv(const WindowReport& r) {
  std::ostringstream out;
  out << "trial,separable,window_found,window_start,window_length,"
         "window_censored,mislabeled_flip_epoch,rare_flip_epoch\n";
  for (const auto& o : r.outcomes)
    out << o.trial << ',' << (o.separable ? 1 : 0) << ','
        << (o.window_found ? 1 : 0) << ',' << o.window_start << ','
        << o.window_length << ',' << (o.window_censored ? 1 : 0) << ','
        << o.mislabeled_flip_epoch << ',' << o.rare_flip_epoch << '\n';
  return out.str();
}

}  // namespace ssft
