#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "linecal/types.hpp"

namespace linecal {

/// Feasible region for positive-sequence correction factors.
struct FactorBox {
  double real_lo = 0.9452;
  double real_hi = 1.0526;
  double imag_lo = -0.1005;
  double imag_hi = 0.1005;

  CorrectionFactor clamp(CorrectionFactor k) const;
  bool contains(CorrectionFactor k) const;
  /// True when either component is within `tol` of a face.
  bool at_bound(CorrectionFactor k, double tol = 1e-9) const;
};

/// Scalar least squares for an unknown PT factor from a known one on the
/// same bus, averaged over stride portions.
CorrectionFactor propagate_voltage(CorrectionFactor kv_known, std::span<const Phasor> v_known,
                                   std::span<const Phasor> v_target, std::size_t portions);

/// One current channel at a bus, measured into its element.
struct CurrentChannel {
  ChannelKey key;
  std::vector<Phasor> measured;
  std::optional<CorrectionFactor> known;
  std::string parallel_group;  // empty when the line has no parallel partner
};

struct BusContext {
  std::string bus;
  std::vector<CurrentChannel> currents;
};

struct PropagationOptions {
  std::size_t portions = 30;
  bool merge_parallel = true;
  bool pooled = false;  // one QP over all frames instead of per-portion averaging
  FactorBox box;
};

struct PropagatedFactor {
  ChannelKey key;
  CorrectionFactor factor;
  bool at_bound = false;
  bool merged = false;
  /// Share of the per-portion QP solutions with this unknown within
  /// kPortionBoundTolerance of a bound; for merged lines, that of the group sum.
  double portion_bound_fraction = 0.0;
};

inline constexpr double kPortionBoundTolerance = 1e-3;

struct PropagationResult {
  std::vector<PropagatedFactor> factors;  // unknown channels only, in context order
  double residual_norm = 0.0;             // RMS KCL mismatch per frame at the returned factors
};

/// Bounded least-squares solve of KCL for every unknown current factor.
PropagationResult propagate_currents(const BusContext& ctx, const PropagationOptions& options);

/// Frame-wise sum of the measured currents of a parallel group.
std::vector<Phasor> sum_parallel_group(std::span<const CurrentChannel> group);

/// Per-line factors from the corrected group sum: each line carries an equal
/// share, and its factor is the frame-averaged ratio of that share to its
/// own measurement.
std::vector<CorrectionFactor> split_parallel_group(CorrectionFactor k_sum,
                                                   std::span<const CurrentChannel> group);

}  // namespace linecal
