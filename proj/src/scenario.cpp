#include "linecal/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "linecal/error_model.hpp"

namespace linecal {

const std::vector<Phasor>& VoltageFrames::at(const std::string& bus) const {
  auto it = bus_voltages.find(bus);
  if (it == bus_voltages.end()) throw ValidationError("no voltage series for bus '" + bus + "'", bus);
  return it->second;
}

const BranchEndSeries& TrueMeasurementSet::branch(const std::string& line, LineEnd end) const {
  auto it = branches.find({line, end});
  if (it == branches.end()) throw ValidationError("no series for line '" + line + "'", line);
  return it->second;
}

VoltageFrames generate_profiles(const NetworkModel& network, std::size_t n_frames,
                                std::uint64_t seed, const LoadShape& shape) {
  if (n_frames < 2) throw ValidationError("need at least two frames", "n_frames");
  if (shape.magnitude_std < 0.0 || shape.angle_jitter_deg < 0.0 || shape.angle_spread_deg < 0.0) {
    throw ValidationError("perturbation parameters must be non-negative", "load_shape");
  }
  if (!(shape.frame_rate > 0.0)) throw ValidationError("frame rate must be positive", "load_shape");
  if (!(shape.magnitude_floor < shape.magnitude_ceiling)) {
    throw ValidationError("magnitude band is empty", "load_shape");
  }

  constexpr double kDeg = std::numbers::pi / 180.0;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x50524f46u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  VoltageFrames frames;
  frames.frame_times.resize(n_frames);
  for (std::size_t t = 0; t < n_frames; ++t) {
    frames.frame_times[t] = static_cast<double>(t) / shape.frame_rate;
  }

  // Buses in id order so the draw sequence is independent of file order.
  std::vector<std::string> ids;
  for (const auto& b : network.buses()) ids.push_back(b.id);
  std::sort(ids.begin(), ids.end());

  std::map<std::string, double> offset;
  for (const auto& id : ids) {
    const double draw = unit(rng);
    offset[id] = network.bus(id).is_reference ? 0.0 : draw * shape.angle_spread_deg * kDeg;
  }

  const double flat = 0.5 * (shape.ramp_start + shape.ramp_end);
  for (const auto& id : ids) {
    auto& series = frames.bus_voltages[id];
    series.resize(n_frames);
    for (std::size_t t = 0; t < n_frames; ++t) {
      const double progress = static_cast<double>(t) / static_cast<double>(n_frames - 1);
      const double trend =
          shape.ramp_enabled ? shape.ramp_start + (shape.ramp_end - shape.ramp_start) * progress
                             : flat;
      const double mag = std::clamp(trend + shape.magnitude_std * gauss(rng),
                                    shape.magnitude_floor, shape.magnitude_ceiling);
      const double ang = offset[id] + shape.angle_jitter_deg * kDeg * unit(rng);
      series[t] = std::polar(mag, ang);
    }
  }
  return frames;
}

Eigen::Vector3cd balanced_phases(Phasor ps) {
  const Complex a = sequence_operator();
  return {ps, ps * a * a, ps * a};
}

Phasor positive_sequence_of(const Eigen::Vector3cd& abc) {
  return positive_sequence({abc(0), abc(1), abc(2)});
}

ThreePhaseEnd untransposed_far_end(const Eigen::Vector3cd& v_abc_i, const Eigen::Vector3cd& i_abc_i,
                                   const Eigen::Matrix3cd& z_abc, const Eigen::Matrix3cd& y_abc) {
  auto symmetric = [](const Eigen::Matrix3cd& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
  };
  if (!symmetric(z_abc) || !symmetric(y_abc)) {
    throw ValidationError("phase matrices must be symmetric", "z_abc/y_abc");
  }
  const Eigen::Vector3cd i_series = i_abc_i - y_abc * v_abc_i;
  ThreePhaseEnd far;
  far.voltage = v_abc_i - z_abc * i_series;
  far.current = -i_series + y_abc * far.voltage;
  return far;
}

TrueMeasurementSet branch_and_injection_currents(const NetworkModel& network,
                                                 const VoltageFrames& frames) {
  TrueMeasurementSet out;
  out.frames = frames;
  const std::size_t n = frames.size();
  for (const auto& b : network.buses()) {
    const auto& series = frames.at(b.id);
    if (series.size() != n) throw ValidationError("voltage series length mismatch", b.id);
    out.injections[b.id].assign(n, Phasor{});
  }

  for (const auto& line : network.lines()) {
    const auto& vi = frames.at(line.from_bus);
    const auto& vj = frames.at(line.to_bus);
    BranchEndSeries from, to;
    from.voltage = vi;
    from.current.resize(n);
    to.current.resize(n);

    if (!line.three_phase) {
      to.voltage = vj;
      for (std::size_t t = 0; t < n; ++t) {
        std::tie(from.current[t], to.current[t]) =
            terminal_currents(line.series_impedance(), line.shunt_admittance(), vi[t], vj[t]);
      }
    } else {
      // Drive the phase model from the from-end: balanced voltage and the
      // positive-sequence current the pi model assigns to that end.
      const double v_base = network.v_base(line.from_bus);
      const double i_base = network.i_base(line.from_bus);
      to.voltage.resize(n);
      from.voltage_abc.resize(n);
      from.current_abc.resize(n);
      to.voltage_abc.resize(n);
      to.current_abc.resize(n);
      for (std::size_t t = 0; t < n; ++t) {
        const Phasor i_from =
            terminal_currents(line.series_impedance(), line.shunt_admittance(), vi[t], vj[t]).first;
        const Eigen::Vector3cd v_abc = balanced_phases(vi[t]);
        const Eigen::Vector3cd i_abc = balanced_phases(i_from);
        const auto far = untransposed_far_end(v_abc * v_base, i_abc * i_base,
                                              line.three_phase->z_abc_ohm,
                                              line.three_phase->y_abc_siemens);
        from.voltage_abc[t] = v_abc;
        from.current_abc[t] = i_abc;
        from.current[t] = i_from;
        to.voltage_abc[t] = far.voltage / v_base;
        to.current_abc[t] = far.current / i_base;
        to.voltage[t] = positive_sequence_of(to.voltage_abc[t]);
        to.current[t] = positive_sequence_of(to.current_abc[t]);
      }
    }

    auto& inj_from = out.injections[line.from_bus];
    auto& inj_to = out.injections[line.to_bus];
    for (std::size_t t = 0; t < n; ++t) {
      inj_from[t] -= from.current[t];
      inj_to[t] -= to.current[t];
    }
    out.branches.emplace(std::pair{line.id, LineEnd::From}, std::move(from));
    out.branches.emplace(std::pair{line.id, LineEnd::To}, std::move(to));
  }
  return out;
}

}  // namespace linecal
