#include "linecal/error_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace linecal {

Complex sequence_operator() { return std::polar(1.0, 2.0 * std::numbers::pi / 3.0); }

Complex RatioError::phase(std::size_t ph) const {
  return std::polar(magnitude.at(ph), angle_deg.at(ph) * std::numbers::pi / 180.0);
}

std::map<ChannelKey, RatioError> sample_ratio_errors(std::uint64_t seed,
                                                     const RatioErrorBounds& bounds,
                                                     std::span<const ChannelKey> channels) {
  if (channels.empty()) throw ValidationError("no channels to sample ratio errors for", "");
  if (bounds.magnitude_lo > bounds.magnitude_hi || bounds.angle_lo_deg > bounds.angle_hi_deg) {
    throw ValidationError("ratio-error bounds are inverted", "bounds");
  }
  if (bounds.magnitude_lo <= 0.0) throw ValidationError("ratio-error magnitude must be positive", "bounds");

  std::vector<ChannelKey> keys(channels.begin(), channels.end());
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x52415449u};
  std::mt19937_64 rng(seq);
  // uniform_real_distribution needs a < b; degenerate intervals are returned as is.
  auto draw = [&rng](double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  std::map<ChannelKey, RatioError> out;
  for (const auto& key : keys) {
    RatioError re;
    for (std::size_t ph = 0; ph < 3; ++ph) {
      re.magnitude[ph] = draw(bounds.magnitude_lo, bounds.magnitude_hi);
      re.angle_deg[ph] = draw(bounds.angle_lo_deg, bounds.angle_hi_deg);
    }
    out.emplace(key, re);
  }
  return out;
}

Complex ps_ratio_error(const RatioError& re, const std::optional<PhaseWeights>& betas) {
  const auto phases = re.phases();
  if (!betas) return (phases[0] + phases[1] + phases[2]) / 3.0;
  const auto& b = *betas;
  const Complex sum = b[0] + b[1] + b[2];
  if (std::abs(sum) == 0.0) throw DegenerateModelError("phase weights sum to zero");
  return (b[0] * phases[0] + b[1] * phases[1] + b[2] * phases[2]) / sum;
}

Phasor quantize(Phasor p, double scale) {
  if (!(scale > 0.0)) throw ValidationError("quantization scale must be positive", "scale");
  return {scale * std::round(p.real() / scale), scale * std::round(p.imag() / scale)};
}

std::array<Complex, 3> expand_phases(Phasor ps, const PhaseWeights& betas) {
  const Complex a = sequence_operator();
  return {betas[0] * ps, betas[1] * ps / a, betas[2] * ps / (a * a)};
}

Complex positive_sequence(const std::array<Complex, 3>& phases) {
  const Complex a = sequence_operator();
  return (phases[0] + a * phases[1] + a * a * phases[2]) / 3.0;
}

PhaseWeights phase_weights(const std::array<Complex, 3>& phases) {
  const Complex ps = positive_sequence(phases);
  if (std::abs(ps) == 0.0) return kBalancedWeights;
  const Complex a = sequence_operator();
  return {phases[0] / ps, a * phases[1] / ps, a * a * phases[2] / ps};
}

ChannelFrame simulate_frame(Phasor true_ps_pu, const ChannelErrorSpec& spec,
                            const PhaseWeights& betas) {
  ChannelFrame frame;
  const auto phases_pu = expand_phases(true_ps_pu, betas);
  std::array<Complex, 3> back_pu;
  for (std::size_t ph = 0; ph < 3; ++ph) {
    frame.true_phases[ph] = phases_pu[ph] * spec.base;
    frame.measured_phases[ph] = spec.ratio_error.phase(ph) * phases_pu[ph] * spec.base;
    frame.quantized_phases[ph] = spec.quantization_scale
                                     ? quantize(frame.measured_phases[ph], *spec.quantization_scale)
                                     : frame.measured_phases[ph];
    back_pu[ph] = frame.quantized_phases[ph] / spec.base;
  }
  frame.output_pu = positive_sequence(back_pu);
  return frame;
}

std::vector<Phasor> simulate_channel(std::span<const Phasor> true_ps, const ChannelErrorSpec& spec,
                                     bool transposed, std::span<const PhaseWeights> betas) {
  if (true_ps.empty()) throw ValidationError("empty series", spec.key.to_string());
  if (!(spec.base > 0.0)) {
    throw ValidationError("channel has no physical base", spec.key.to_string());
  }
  if (spec.quantization_scale && !(*spec.quantization_scale > 0.0)) {
    throw ValidationError("quantization scale must be positive", spec.key.to_string());
  }
  if (!transposed && betas.size() != 1 && betas.size() != true_ps.size()) {
    throw ValidationError("un-transposed channel needs one weight set or one per frame",
                          spec.key.to_string());
  }

  std::vector<Phasor> out;
  out.reserve(true_ps.size());
  for (std::size_t t = 0; t < true_ps.size(); ++t) {
    const PhaseWeights& w =
        transposed ? kBalancedWeights : (betas.size() == 1 ? betas[0] : betas[t]);
    out.push_back(simulate_frame(true_ps[t], spec, w).output_pu);
  }
  return out;
}

std::vector<std::vector<std::size_t>> partition_indices(std::size_t n, std::size_t portions) {
  if (portions == 0) throw ValidationError("portion count must be positive", "portions");
  if (n < portions) {
    throw ValidationError("series of " + std::to_string(n) + " frames cannot form " +
                              std::to_string(portions) + " portions",
                          "portions");
  }
  std::vector<std::vector<std::size_t>> out(portions);
  for (std::size_t i = 0; i < n; ++i) out[i % portions].push_back(i);
  return out;
}

}  // namespace linecal
