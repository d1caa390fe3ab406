#include "ssft/svm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssft/errors.hpp"
#include "ssft/linalg.hpp"

namespace ssft {

SvmSolution hard_margin_svm(const std::vector<std::vector<double>>& points,
                            const std::vector<int>& labels,
                            const SvmOptions& options,
                            const std::vector<int>* ids) {
  const std::size_t n = points.size();
  if (n == 0) throw ConfigError("hard_margin_svm: no points");
  if (labels.size() != n) throw ConfigError("hard_margin_svm: label count mismatch");
  if (static_cast<int>(n) > options.max_points)
    throw ConfigError("hard_margin_svm: instance exceeds max_points = " +
                      std::to_string(options.max_points));
  const std::size_t d = points.front().size();
  for (const auto& p : points)
    if (p.size() != d) throw ConfigError("hard_margin_svm: ragged points");
  for (int y : labels)
    if (y != 1 && y != -1) throw ConfigError("hard_margin_svm: labels must be +/-1");

  std::vector<double> sq_norm(n);
  for (std::size_t i = 0; i < n; ++i) {
    sq_norm[i] = dot(points[i], points[i]);
    if (sq_norm[i] <= 0.0)
      throw ConfigError("hard_margin_svm: zero point cannot satisfy a margin");
  }

  std::vector<double> alpha(n, 0.0);
  std::vector<double> w(d, 0.0);

  SvmSolution sol;
  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    for (std::size_t i = 0; i < n; ++i) {
      const double margin = labels[i] * dot(w, points[i]);
      const double delta =
          std::max(-alpha[i], (1.0 - margin) / sq_norm[i]);
      if (delta != 0.0) {
        alpha[i] += delta;
        axpy(delta * labels[i], points[i], w);
      }
    }

    double max_alpha = 0.0;
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double margin = labels[i] * dot(w, points[i]);
      residual = std::max(residual, 1.0 - margin);            // feasibility
      if (alpha[i] > 0.0)
        residual = std::max(residual, std::abs(margin - 1.0));  // slackness
      max_alpha = std::max(max_alpha, alpha[i]);
    }
    if (max_alpha > options.alpha_cap)
      throw NonSeparableError(
          "hard_margin_svm: dual variables diverged; data look non-separable");
    if (residual < options.tolerance) {
      sol.sweeps = sweep;
      sol.kkt_residual = residual;
      sol.w = std::move(w);
      sol.dual_coefficients = std::move(alpha);
      for (std::size_t i = 0; i < n; ++i)
        if (sol.dual_coefficients[i] > options.tolerance)
          sol.support_ids.push_back(ids ? (*ids)[i] : static_cast<int>(i));
      return sol;
    }
  }
  throw NonSeparableError(
      "hard_margin_svm: no feasible point within the sweep cap");
}

bool is_separable(const std::vector<std::vector<double>>& points,
                  const std::vector<int>& labels, const SvmOptions& options) {
  try {
    hard_margin_svm(points, labels, options);
    return true;
  } catch (const NonSeparableError&) {
    return false;
  }
}

}  // namespace ssft
