#pragma once

#include <Eigen/Dense>

namespace linecal {

/// Relative singular-value threshold below which a regression matrix is
/// treated as rank deficient. Shared by both solvers.
inline constexpr double kRankTolerance = 1e-10;

struct LseSolution {
  Eigen::MatrixXcd x;
  double condition = 0.0;  // sigma_max / sigma_min of A
};

/// X minimizing ||A X - B||_F via column-pivoted Householder QR.
/// Throws IllConditionedError when sigma_min < kRankTolerance * sigma_max.
LseSolution complex_lse(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

/// min ||G k - h||^2 subject to lower <= k <= upper.
struct BoxQpProblem {
  Eigen::MatrixXd g;
  Eigen::VectorXd h;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct BoxQpOptions {
  double tolerance = 1e-10;  // projected-gradient norm, relative to max(1, ||2 G^T h||)
  int max_iterations = 100000;
};

struct BoxQpSolution {
  Eigen::VectorXd k;
  double objective = 0.0;
  double projected_gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Projected gradient with exact line search, each step followed by an
/// active-set polish (least squares on the free coordinates, truncated at
/// the first bound it crosses).
BoxQpSolution box_qp(const BoxQpProblem& problem, const BoxQpOptions& options = {});

}  // namespace linecal
