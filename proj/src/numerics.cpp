#include "linecal/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "linecal/types.hpp"

namespace linecal {

LseSolution complex_lse(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  if (a.rows() != b.rows()) throw ValidationError("A and B row counts differ", "lse");
  if (a.cols() == 0 || a.rows() < a.cols()) {
    throw ValidationError("least squares needs at least as many rows as unknowns", "lse");
  }
  if (!a.allFinite() || !b.allFinite()) throw ValidationError("non-finite least-squares input", "lse");

  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  const auto& sv = svd.singularValues();
  const double s_max = sv(0);
  const double s_min = sv(sv.size() - 1);
  const double condition = s_min > 0.0 ? s_max / s_min : std::numeric_limits<double>::infinity();
  if (!(s_min >= kRankTolerance * s_max) || s_max == 0.0) {
    throw IllConditionedError("regression matrix is rank deficient (condition " +
                                  std::to_string(condition) + ")",
                              condition);
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(a);
  return {qr.solve(b), condition};
}

namespace {

struct Quadratic {
  const Eigen::MatrixXd& g;
  const Eigen::VectorXd& h;

  double value(const Eigen::VectorXd& k) const { return (g * k - h).squaredNorm(); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& k) const {
    return 2.0 * g.transpose() * (g * k - h);
  }
};

Eigen::VectorXd project(const Eigen::VectorXd& k, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi) {
  return k.cwiseMax(lo).cwiseMin(hi);
}

Eigen::VectorXd projected_gradient(const Eigen::VectorXd& k, const Eigen::VectorXd& grad,
                                   const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Eigen::VectorXd pg = grad;
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    if ((k(i) <= lo(i) && grad(i) > 0.0) || (k(i) >= hi(i) && grad(i) < 0.0)) pg(i) = 0.0;
  }
  return pg;
}

// Least squares over the free coordinates with the rest held fixed, then a
// move toward that point truncated at the first bound.
bool polish(const Quadratic& q, Eigen::VectorXd& k, const Eigen::VectorXd& lo,
            const Eigen::VectorXd& hi) {
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    if (k(i) > lo(i) && k(i) < hi(i)) free.push_back(i);
  }
  if (free.empty()) return false;

  Eigen::MatrixXd g_free(q.g.rows(), static_cast<Eigen::Index>(free.size()));
  Eigen::VectorXd k_fixed = k;
  for (std::size_t c = 0; c < free.size(); ++c) {
    g_free.col(static_cast<Eigen::Index>(c)) = q.g.col(free[c]);
    k_fixed(free[c]) = 0.0;
  }
  const Eigen::VectorXd rhs = q.h - q.g * k_fixed;
  const Eigen::VectorXd target = g_free.colPivHouseholderQr().solve(rhs);
  if (!target.allFinite()) return false;

  double step = 1.0;
  for (std::size_t c = 0; c < free.size(); ++c) {
    const auto i = free[c];
    const double delta = target(static_cast<Eigen::Index>(c)) - k(i);
    if (delta > 0.0) step = std::min(step, (hi(i) - k(i)) / delta);
    if (delta < 0.0) step = std::min(step, (lo(i) - k(i)) / delta);
  }
  step = std::max(step, 0.0);

  Eigen::VectorXd candidate = k;
  for (std::size_t c = 0; c < free.size(); ++c) {
    const auto i = free[c];
    candidate(i) = k(i) + step * (target(static_cast<Eigen::Index>(c)) - k(i));
  }
  candidate = project(candidate, lo, hi);
  if (q.value(candidate) <= q.value(k)) {
    k = candidate;
    return true;
  }
  return false;
}

}  // namespace

BoxQpSolution box_qp(const BoxQpProblem& p, const BoxQpOptions& options) {
  const auto d = p.g.cols();
  if (p.h.size() != p.g.rows() || p.lower.size() != d || p.upper.size() != d || d == 0) {
    throw ValidationError("box QP dimensions are inconsistent", "box_qp");
  }
  if (!p.g.allFinite() || !p.h.allFinite() || p.lower.hasNaN() || p.upper.hasNaN()) {
    throw ValidationError("box QP input is not finite", "box_qp");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (p.lower(i) > p.upper(i)) {
      throw ValidationError("box QP lower bound exceeds upper bound at coordinate " +
                                std::to_string(i),
                            "box_qp");
    }
  }

  const Quadratic q{p.g, p.h};
  const double scale = std::max(1.0, (2.0 * p.g.transpose() * p.h).norm());

  // Start from the clipped unconstrained solution; it is already optimal
  // whenever the box is inactive.
  Eigen::VectorXd k = p.g.colPivHouseholderQr().solve(p.h);
  if (!k.allFinite()) k = 0.5 * (p.lower + p.upper);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!std::isfinite(k(i))) k(i) = std::isfinite(p.lower(i)) ? p.lower(i) : p.upper(i);
  }
  k = project(k, p.lower, p.upper);

  BoxQpSolution out;
  for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
    const Eigen::VectorXd grad = q.gradient(k);
    const Eigen::VectorXd pg = projected_gradient(k, grad, p.lower, p.upper);
    out.projected_gradient_norm = pg.norm();
    if (out.projected_gradient_norm <= options.tolerance * scale) {
      out.converged = true;
      break;
    }

    // Exact minimizer along -pg, then projected backtracking until the
    // objective decreases.
    const Eigen::VectorXd gd = p.g * pg;
    const double curvature = 2.0 * gd.squaredNorm();
    double alpha = curvature > 0.0 ? pg.squaredNorm() / curvature : 1.0;
    const double f0 = q.value(k);
    for (int tries = 0; tries < 60; ++tries) {
      Eigen::VectorXd trial = project(k - alpha * pg, p.lower, p.upper);
      if (q.value(trial) <= f0) {
        k = std::move(trial);
        break;
      }
      alpha *= 0.5;
    }

    polish(q, k, p.lower, p.upper);
  }

  out.k = k;
  out.objective = q.value(k);
  return out;
}

}  // namespace linecal
