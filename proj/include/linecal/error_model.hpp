#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "linecal/types.hpp"

namespace linecal {

/// Complex rotation a = exp(j 2 pi / 3).
Complex sequence_operator();

/// Per-phase weights relating each phase to the positive sequence,
/// beta_A = X_A / X_P, beta_B = a X_B / X_P, beta_C = a^2 X_C / X_P.
using PhaseWeights = std::array<Complex, 3>;

inline constexpr PhaseWeights kBalancedWeights{Complex{1.0, 0.0}, Complex{1.0, 0.0},
                                               Complex{1.0, 0.0}};

struct RatioErrorBounds {
  double magnitude_lo = 0.95;
  double magnitude_hi = 1.05;
  double angle_lo_deg = -5.0;
  double angle_hi_deg = 5.0;
};

/// Constant per-phase ratio error of one CT or PT.
struct RatioError {
  std::array<double, 3> magnitude{1.0, 1.0, 1.0};
  std::array<double, 3> angle_deg{0.0, 0.0, 0.0};

  static RatioError identity() { return {}; }
  Complex phase(std::size_t ph) const;
  std::array<Complex, 3> phases() const { return {phase(0), phase(1), phase(2)}; }
};

/// Independent uniform draws per phase and channel. Keys are processed in
/// sorted order so the result depends only on the seed and the key set.
std::map<ChannelKey, RatioError> sample_ratio_errors(std::uint64_t seed,
                                                     const RatioErrorBounds& bounds,
                                                     std::span<const ChannelKey> channels);

/// Positive-sequence ratio error: the phase mean, or the beta-weighted mean
/// for unbalanced three-phase data.
Complex ps_ratio_error(const RatioError& re, const std::optional<PhaseWeights>& betas = {});

/// Rounds real and imaginary parts independently to multiples of `scale`,
/// half away from zero.
Phasor quantize(Phasor p, double scale);

struct ChannelErrorSpec {
  ChannelKey key;
  RatioError ratio_error;
  std::optional<double> quantization_scale;  // volts or amps; nullopt disables the ADC step
  double base = 0.0;                         // V_base or I_base, physical units per pu
};

/// Intermediate values of one frame through the measurement chain.
struct ChannelFrame {
  std::array<Complex, 3> true_phases;      // physical, before ratio error
  std::array<Complex, 3> measured_phases;  // physical, after ratio error
  std::array<Complex, 3> quantized_phases; // physical, after the ADC
  Phasor output_pu;                        // positive sequence of the quantized phases
};

/// Expands a positive-sequence value into three phases using `betas`.
std::array<Complex, 3> expand_phases(Phasor ps, const PhaseWeights& betas);

/// Positive-sequence transform (X_A + a X_B + a^2 X_C) / 3.
Complex positive_sequence(const std::array<Complex, 3>& phases);

/// Weights that reproduce `phases` from their positive sequence.
PhaseWeights phase_weights(const std::array<Complex, 3>& phases);

ChannelFrame simulate_frame(Phasor true_ps_pu, const ChannelErrorSpec& spec,
                            const PhaseWeights& betas = kBalancedWeights);

/// Full measurement chain for a series: three-phase expansion, ratio error,
/// pu to physical, quantization, back to pu, positive-sequence transform.
/// `betas` is ignored when `transposed`; otherwise it holds either one weight
/// set for all frames or one per frame.
std::vector<Phasor> simulate_channel(std::span<const Phasor> true_ps, const ChannelErrorSpec& spec,
                                     bool transposed = true,
                                     std::span<const PhaseWeights> betas = {});

/// Stride partition: portion p holds indices p, p + P, p + 2P, ...
std::vector<std::vector<std::size_t>> partition_indices(std::size_t n, std::size_t portions);

template <class T>
std::vector<std::vector<T>> partition_frames(std::span<const T> series, std::size_t portions) {
  std::vector<std::vector<T>> out;
  for (const auto& idx : partition_indices(series.size(), portions)) {
    auto& part = out.emplace_back();
    part.reserve(idx.size());
    for (auto i : idx) part.push_back(series[i]);
  }
  return out;
}

}  // namespace linecal
