#pragma once

#include <vector>

#include <Eigen/Dense>

#include "linecal/types.hpp"

namespace linecal {

/// Quantized positive-sequence series at both ends of one line, frame aligned.
/// Currents flow from the bus into the line.
struct LineMeasurements {
  std::vector<Phasor> v_from;
  std::vector<Phasor> v_to;
  std::vector<Phasor> i_from;
  std::vector<Phasor> i_to;
  std::size_t portions = 30;
  /// Variance of the current measurement noise per complex sample, pu^2;
  /// zero when unknown.
  double current_noise_var = 0.0;
};

struct ImpedanceMatrixEstimate {
  Eigen::Matrix2cd z_final;
  std::vector<Eigen::Matrix2cd> per_portion;
  std::vector<double> condition_numbers;
  std::vector<double> min_current_power;  // smallest eigenvalue of A^H A / n per portion
};

/// Average of per-portion least-squares fits of
/// [I_from I_to] * Z^T = [V_from V_to].
ImpedanceMatrixEstimate estimate_impedance_matrix(const LineMeasurements& m);

struct LineDiagnostics {
  double max_condition = 0.0;
  double susceptance_spread = 0.0;    // std error of the portion-wise y estimates, relative to |y|
  double current_factor_mismatch = 0.0;  // |KI_to - alternate KI_to| / |KI_to|
  double attenuation = 0.0;  // current noise power over the weakest current direction
  bool low_confidence = false;
  bool reactance_nonpositive = false;
};

struct LineEstimate {
  Eigen::Matrix2cd z_matrix;  // estimated measured-domain impedance matrix
  Complex w;                  // 1 + Z y
  Complex impedance;          // R + jX, pu
  Complex admittance;         // jy, pu
  double r = 0.0;
  double x = 0.0;
  double y = 0.0;
  CorrectionFactor kv_to;
  CorrectionFactor ki_to;
  LineDiagnostics diagnostics;
};

/// |y| below which an estimate is never trusted.
inline constexpr double kMinTrustedSusceptance = 1e-6;
/// Portion-to-portion relative standard error of y above which the line is
/// flagged; lines with little shunt current relative to the quantization
/// noise land here.
inline constexpr double kMaxSusceptanceSpread = 0.02;
/// Noise-to-signal ratio along the weakest regressor direction above which
/// the line is flagged; it approximates the relative bias the current noise
/// puts on the shunt admittance.
inline constexpr double kMaxAttenuation = 0.01;

/// Closed-form recovery of W, the to-end correction factors, y and Z from an
/// estimated impedance matrix and the from-end factors.
LineEstimate recover_parameters(const Eigen::Matrix2cd& z_final, CorrectionFactor kv_from,
                                CorrectionFactor ki_from);

/// Matrix estimation, parameter recovery and per-portion diagnostics.
LineEstimate estimate_line(const LineMeasurements& m, CorrectionFactor kv_from,
                           CorrectionFactor ki_from);

/// Un-transposed lines use the same estimator; only the data source differs.
inline LineEstimate estimate_untransposed(const LineMeasurements& m, CorrectionFactor kv_from,
                                          CorrectionFactor ki_from) {
  return estimate_line(m, kv_from, ki_from);
}

/// Measured-domain impedance matrix implied by true parameters and factors.
Eigen::Matrix2cd analytic_impedance_matrix(Complex z, Complex y, CorrectionFactor kv_from,
                                           CorrectionFactor ki_from, CorrectionFactor kv_to,
                                           CorrectionFactor ki_to);

}  // namespace linecal
