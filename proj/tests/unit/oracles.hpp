// Independent reference implementations used only by tests. Each one is a
// deliberately naive restatement of the contract it checks, kept free of
// any code shared with the library implementation.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ssft/dynamics.hpp"

namespace oracle {

// Quadratic scan over every candidate epoch t*.
inline int naive_first_learn(std::span<const std::uint8_t> correct) {
  const int t_max = static_cast<int>(correct.size());
  for (int t_star = 1; t_star <= t_max; ++t_star) {
    bool all_correct = true;
    for (int t = t_star; t <= t_max; ++t)
      if (!correct[static_cast<std::size_t>(t - 1)]) all_correct = false;
    if (all_correct) return t_star;
  }
  return ssft::kNever;
}

inline int naive_first_forget(std::span<const std::uint8_t> correct) {
  const int t_max = static_cast<int>(correct.size());
  for (int t_star = 1; t_star <= t_max; ++t_star) {
    bool all_wrong = true;
    for (int t = t_star; t <= t_max; ++t)
      if (correct[static_cast<std::size_t>(t - 1)]) all_wrong = false;
    if (all_wrong) return t_star;
  }
  return ssft::kNever;
}

inline int naive_forgetting_events(std::span<const std::uint8_t> correct) {
  int events = 0;
  for (std::size_t t = 1; t < correct.size(); ++t)
    if (correct[t - 1] == 1 && correct[t] == 0) ++events;
  return events;
}

inline int naive_count_correct(std::span<const std::uint8_t> correct) {
  int c = 0;
  for (auto v : correct) c += v;
  return c;
}

// All-pairs AUC: fraction of positive/negative pairs ranked suspiciously
// (ties half). `higher_suspicious` orients the score.
inline double naive_auc(const std::vector<double>& scores,
                        const std::vector<bool>& positive,
                        bool higher_suspicious) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      ++pairs;
      const double si = higher_suspicious ? scores[i] : -scores[i];
      const double sj = higher_suspicious ? scores[j] : -scores[j];
      if (si > sj)
        wins += 1.0;
      else if (si == sj)
        wins += 0.5;
    }
  }
  return pairs == 0 ? 0.5 : wins / static_cast<double>(pairs);
}

// Projected-gradient ascent on the max-margin dual: maximize
// sum(alpha) - 0.5 alpha' Q alpha over alpha >= 0, Q_ij = y_i y_j x_i.x_j.
// Fixed step 1/lambda_max(Q) (power-iteration estimate). Returns the primal
// vector sum_i alpha_i y_i x_i.
inline std::vector<double> qp_max_margin(
    const std::vector<std::vector<double>>& x, const std::vector<int>& y,
    long max_iterations = 4000000, double tolerance = 1e-10) {
  const std::size_t n = x.size();
  const std::size_t d = x.front().size();

  std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double dp = 0.0;
      for (std::size_t c = 0; c < d; ++c) dp += x[i][c] * x[j][c];
      q[i][j] = y[i] * y[j] * dp;
    }

  // Power iteration for the top eigenvalue.
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 1.0;
  for (int it = 0; it < 60; ++it) {
    std::vector<double> qv(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) qv[i] += q[i][j] * v[j];
    double norm = 0.0;
    for (double w : qv) norm += w * w;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    lambda = norm;
    for (std::size_t i = 0; i < n; ++i) v[i] = qv[i] / norm;
  }
  const double step = 0.9 / lambda;

  std::vector<double> alpha(n, 0.0);
  std::vector<double> qa(n, 0.0);
  for (long it = 0; it < max_iterations; ++it) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = 1.0 - qa[i];
      const double projected = alpha[i] > 0.0 ? g : std::max(g, 0.0);
      worst = std::max(worst, std::abs(projected));
    }
    if (worst < tolerance) break;
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i)
      next[i] = std::max(0.0, alpha[i] + step * (1.0 - qa[i]));
    // Refresh Q*alpha from scratch; the oracle favors transparency.
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += q[i][j] * next[j];
      qa[i] = s;
    }
    alpha = std::move(next);
  }

  std::vector<double> w(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) w[c] += alpha[i] * y[i] * x[i][c];
  return w;
}

}  // namespace oracle
