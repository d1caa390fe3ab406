#pragma once

#include <vector>

namespace ssft {

// Minimum-norm separator with unit margin: argmin ||w||^2 subject to
// y_i (w . x_i) >= 1 for every point.
struct SvmSolution {
  std::vector<double> w;
  std::vector<int> support_ids;           // ids with active margin constraints
  std::vector<double> dual_coefficients;  // alpha_i >= 0, aligned with inputs
  double kkt_residual = 0.0;
  int sweeps = 0;
};

struct SvmOptions {
  double tolerance = 1e-8;   // KKT residual target
  int max_sweeps = 200000;   // coordinate passes before giving up
  int max_points = 200;      // documented small-instance bound
  double alpha_cap = 1e9;    // dual blow-up => data not separable
};

// Dual coordinate ascent on the hard-margin dual. `labels` are +/-1.
// `ids` names the points in the returned support set (defaults to indices).
// Throws NonSeparableError when the dual diverges or the cap is hit without
// reaching a feasible primal, ConfigError on malformed input.
SvmSolution hard_margin_svm(const std::vector<std::vector<double>>& points,
                            const std::vector<int>& labels,
                            const SvmOptions& options = {},
                            const std::vector<int>* ids = nullptr);

bool is_separable(const std::vector<std::vector<double>>& points,
                  const std::vector<int>& labels,
                  const SvmOptions& options = {});

}  // namespace ssft
