#include "linecal/line_estimator.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "linecal/error_model.hpp"
#include "linecal/network.hpp"
#include "linecal/numerics.hpp"

namespace linecal {

ImpedanceMatrixEstimate estimate_impedance_matrix(const LineMeasurements& m) {
  const std::size_t n = m.v_from.size();
  if (m.v_to.size() != n || m.i_from.size() != n || m.i_to.size() != n) {
    throw ValidationError("line measurement series have different lengths", "measurements");
  }
  const auto portions = partition_indices(n, m.portions);

  ImpedanceMatrixEstimate out;
  Eigen::Matrix2cd sum_transposed = Eigen::Matrix2cd::Zero();
  for (std::size_t p = 0; p < portions.size(); ++p) {
    const auto& idx = portions[p];
    if (idx.size() < 2) {
      throw ValidationError("portion " + std::to_string(p) + " has fewer than two frames",
                            "portions");
    }
    const auto rows = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXcd a(rows, 2), b(rows, 2);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto t = idx[static_cast<std::size_t>(r)];
      a(r, 0) = m.i_from[t];
      a(r, 1) = m.i_to[t];
      b(r, 0) = m.v_from[t];
      b(r, 1) = m.v_to[t];
    }
    LseSolution sol;
    try {
      sol = complex_lse(a, b);
    } catch (const IllConditionedError& e) {
      throw IllConditionedError("portion " + std::to_string(p) + ": " + e.what(), e.condition());
    }
    const Eigen::Matrix2cd zt = sol.x;
    out.per_portion.push_back(zt.transpose());
    out.condition_numbers.push_back(sol.condition);
    const Eigen::Matrix2cd gram = a.adjoint() * a / static_cast<double>(rows);
    out.min_current_power.push_back(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd>(gram).eigenvalues()(0));
    sum_transposed += zt;
  }
  out.z_final = (sum_transposed / static_cast<double>(portions.size())).transpose();
  return out;
}

LineEstimate recover_parameters(const Eigen::Matrix2cd& z, CorrectionFactor kv_from,
                                CorrectionFactor ki_from) {
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      if (z(r, c) == Complex{} || !std::isfinite(std::abs(z(r, c)))) {
        throw DegenerateModelError("impedance matrix entry (" + std::to_string(r + 1) + "," +
                                   std::to_string(c + 1) + ") is zero or non-finite");
      }
    }
  }

  LineEstimate est;
  est.z_matrix = z;
  // Principal root: non-negative real part.
  est.w = std::sqrt(z(0, 0) * z(1, 1) / (z(1, 0) * z(0, 1)));
  if (std::abs(est.w - 1.0) < 1e-12) {
    throw DegenerateModelError("W is 1: the line has no measurable length");
  }

  est.kv_to = (1.0 / est.w) * (z(0, 0) / z(1, 0)) * kv_from;
  est.ki_to = est.w * (z(0, 1) / z(0, 0)) * ki_from;
  const Complex ki_alt = (1.0 / est.w) * (z(1, 1) / z(1, 0)) * ki_from;
  est.diagnostics.current_factor_mismatch = std::abs(est.ki_to - ki_alt) / std::abs(est.ki_to);

  const Complex y_squared = (1.0 / z.determinant()) * (ki_from * est.ki_to) /
                            (kv_from * est.kv_to) * (est.w - 1.0) / (est.w + 1.0);
  est.admittance = std::sqrt(y_squared);
  if (est.admittance.imag() < 0.0) est.admittance = -est.admittance;
  if (est.admittance == Complex{}) throw DegenerateModelError("estimated shunt admittance is zero");

  est.impedance = (est.w - 1.0) / est.admittance;
  est.r = est.impedance.real();
  est.x = est.impedance.imag();
  est.y = est.admittance.imag();
  est.diagnostics.reactance_nonpositive = !(est.x > 0.0);
  est.diagnostics.low_confidence = std::abs(est.admittance) < kMinTrustedSusceptance;
  return est;
}

LineEstimate estimate_line(const LineMeasurements& m, CorrectionFactor kv_from,
                           CorrectionFactor ki_from) {
  const auto matrix = estimate_impedance_matrix(m);
  LineEstimate est = recover_parameters(matrix.z_final, kv_from, ki_from);

  for (double c : matrix.condition_numbers) {
    est.diagnostics.max_condition = std::max(est.diagnostics.max_condition, c);
  }

  if (m.current_noise_var > 0.0) {
    double power = 0.0;
    for (double v : matrix.min_current_power) power += v;
    power /= static_cast<double>(matrix.min_current_power.size());
    est.diagnostics.attenuation =
        power > 0.0 ? m.current_noise_var / power : std::numeric_limits<double>::infinity();
    if (!(est.diagnostics.attenuation <= kMaxAttenuation)) est.diagnostics.low_confidence = true;
  }

  // Portion-wise susceptance estimates; a portion that cannot be inverted
  // counts as total loss of confidence.
  const std::size_t p = matrix.per_portion.size();
  if (p > 1) {
    double sum = 0.0, sum_sq = 0.0;
    bool all_valid = true;
    for (const auto& zk : matrix.per_portion) {
      try {
        const double yk = recover_parameters(zk, kv_from, ki_from).y;
        sum += yk;
        sum_sq += yk * yk;
      } catch (const Error&) {
        all_valid = false;
      }
    }
    if (all_valid) {
      const double mean = sum / static_cast<double>(p);
      const double var = std::max(0.0, (sum_sq - p * mean * mean) / static_cast<double>(p - 1));
      est.diagnostics.susceptance_spread =
          std::sqrt(var / static_cast<double>(p)) / std::abs(est.y);
    } else {
      est.diagnostics.susceptance_spread = std::numeric_limits<double>::infinity();
    }
    if (!(est.diagnostics.susceptance_spread <= kMaxSusceptanceSpread)) {
      est.diagnostics.low_confidence = true;
    }
  }
  return est;
}

Eigen::Matrix2cd analytic_impedance_matrix(Complex z, Complex y, CorrectionFactor kv_from,
                                           CorrectionFactor ki_from, CorrectionFactor kv_to,
                                           CorrectionFactor ki_to) {
  Eigen::Matrix2cd m = impedance_matrix(z, y);
  const CorrectionFactor kv[2] = {kv_from, kv_to};
  const CorrectionFactor ki[2] = {ki_from, ki_to};
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) m(r, c) *= ki[c] / kv[r];
  }
  return m;
}

}  // namespace linecal
