#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ssft/datagen.hpp"
#include "ssft/linalg.hpp"

namespace ssft {

// Homogeneous linear classifier (no bias term). Multiclass scores are W*x
// with one weight row per class; binary mode keeps a single vector and
// decides by sign, with class 1 mapped to +1 and class 0 to -1.
struct LinearModel {
  int num_classes = 2;
  int dim = 0;
  bool binary = false;
  std::vector<double> weights;  // binary: [dim]; else row-major [num_classes x dim]

  static LinearModel make_binary(int dim) {
    LinearModel m;
    m.num_classes = 2;
    m.dim = dim;
    m.binary = true;
    m.weights.assign(static_cast<std::size_t>(dim), 0.0);
    return m;
  }

  static LinearModel make_multiclass(int num_classes, int dim) {
    LinearModel m;
    m.num_classes = num_classes;
    m.dim = dim;
    m.binary = false;
    m.weights.assign(static_cast<std::size_t>(num_classes) * dim, 0.0);
    return m;
  }

  std::span<double> row(int c) {
    return std::span<double>(weights).subspan(
        static_cast<std::size_t>(c) * dim, static_cast<std::size_t>(dim));
  }
  std::span<const double> row(int c) const {
    return std::span<const double>(weights).subspan(
        static_cast<std::size_t>(c) * dim, static_cast<std::size_t>(dim));
  }

  double binary_score(std::span<const double> x) const {
    return dot(weights, x);
  }

  void scores(std::span<const double> x, std::span<double> out) const {
    for (int c = 0; c < num_classes; ++c) out[static_cast<std::size_t>(c)] = dot(row(c), x);
  }

  int predict(std::span<const double> x) const {
    if (binary) return binary_score(x) > 0.0 ? 1 : 0;
    int best = 0;
    double best_score = dot(row(0), x);
    for (int c = 1; c < num_classes; ++c) {
      const double s = dot(row(c), x);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    return best;
  }

  // Probability assigned to `label`: softmax mass in multiclass mode, the
  // logistic-squashed signed margin in binary mode. Always in [0, 1].
  double confidence(std::span<const double> x, int label) const {
    if (binary) {
      const double sign = label == 1 ? 1.0 : -1.0;
      return 1.0 / (1.0 + std::exp(-sign * binary_score(x)));
    }
    std::vector<double> s(static_cast<std::size_t>(num_classes));
    scores(x, s);
    double max_s = s[0];
    for (double v : s) max_s = std::max(max_s, v);
    double denom = 0.0;
    for (double v : s) denom += std::exp(v - max_s);
    return std::exp(s[static_cast<std::size_t>(label)] - max_s) / denom;
  }
};

inline double label_sign(int label) { return label == 1 ? 1.0 : -1.0; }

// Per-epoch record of the model's behaviour on a tracked example set.
// Column 0 is the state before any update in the phase; columns 1..epochs
// are end-of-epoch evaluations. Entries are stored row-major per example.
struct PredictionHistory {
  SplitId phase = SplitId::kA;
  int epochs = 0;
  std::vector<int> example_ids;
  std::vector<std::uint8_t> correct;  // [examples x (epochs+1)]
  std::vector<double> confidence;     // same shape

  std::size_t stride() const { return static_cast<std::size_t>(epochs) + 1; }
  std::size_t num_examples() const { return example_ids.size(); }

  std::span<const std::uint8_t> correct_row(std::size_t i) const {
    return std::span<const std::uint8_t>(correct).subspan(i * stride(), stride());
  }
  std::span<const double> confidence_row(std::size_t i) const {
    return std::span<const double>(confidence).subspan(i * stride(), stride());
  }

  // Epochs 1..T only (the slice the learn/forget metrics consume).
  std::span<const std::uint8_t> correct_row_after_start(std::size_t i) const {
    return correct_row(i).subspan(1);
  }

  // Row subset by position, preserving order.
  PredictionHistory slice(std::size_t first, std::size_t count) const {
    PredictionHistory out;
    out.phase = phase;
    out.epochs = epochs;
    out.example_ids.assign(example_ids.begin() + static_cast<std::ptrdiff_t>(first),
                           example_ids.begin() + static_cast<std::ptrdiff_t>(first + count));
    out.correct.assign(correct.begin() + static_cast<std::ptrdiff_t>(first * stride()),
                       correct.begin() + static_cast<std::ptrdiff_t>((first + count) * stride()));
    out.confidence.assign(confidence.begin() + static_cast<std::ptrdiff_t>(first * stride()),
                          confidence.begin() + static_cast<std::ptrdiff_t>((first + count) * stride()));
    return out;
  }
};

}  // namespace ssft
