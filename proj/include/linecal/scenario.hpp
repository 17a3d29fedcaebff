#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "linecal/network.hpp"

namespace linecal {

/// Shape of the synthetic operating-point trajectory.
struct LoadShape {
  bool ramp_enabled = true;
  double ramp_start = 0.98;        // pu, first frame
  double ramp_end = 1.03;          // pu, last frame
  double magnitude_std = 0.002;    // pu, per-frame Gaussian perturbation
  double angle_spread_deg = 10.0;  // static per-bus offset drawn from +-spread
  double angle_jitter_deg = 0.5;   // per-frame uniform jitter, +-jitter
  double frame_rate = 30.0;        // frames per second
  double magnitude_floor = 0.95;   // band the magnitudes are clamped to
  double magnitude_ceiling = 1.06;
};

struct VoltageFrames {
  std::vector<double> frame_times;                          // seconds
  std::map<std::string, std::vector<Phasor>> bus_voltages;  // pu

  std::size_t size() const noexcept { return frame_times.size(); }
  const std::vector<Phasor>& at(const std::string& bus) const;
};

enum class LineEnd { From, To };

/// Series measured at one end of one line: the end's voltage and the current
/// flowing from the bus into the line.
struct BranchEndSeries {
  std::vector<Phasor> voltage;
  std::vector<Phasor> current;
  // Present for un-transposed lines: three-phase values in pu (phase-A base).
  std::vector<Eigen::Vector3cd> voltage_abc;
  std::vector<Eigen::Vector3cd> current_abc;

  bool has_phase_data() const noexcept { return !voltage_abc.empty(); }
};

struct TrueMeasurementSet {
  VoltageFrames frames;
  std::map<std::pair<std::string, LineEnd>, BranchEndSeries> branches;  // (line id, end)
  std::map<std::string, std::vector<Phasor>> injections;                // bus id

  const BranchEndSeries& branch(const std::string& line, LineEnd end) const;
};

VoltageFrames generate_profiles(const NetworkModel& network, std::size_t n_frames,
                                std::uint64_t seed, const LoadShape& shape = {});

/// Branch currents from the pi model, injections from KCL. Un-transposed
/// lines are driven from their from-end through the phase matrices, so their
/// to-end voltage carries the resulting imbalance.
TrueMeasurementSet branch_and_injection_currents(const NetworkModel& network,
                                                 const VoltageFrames& frames);

struct ThreePhaseEnd {
  Eigen::Vector3cd voltage;
  Eigen::Vector3cd current;  // into the line
};

/// Far-end voltages and currents of an un-transposed line, physical units.
ThreePhaseEnd untransposed_far_end(const Eigen::Vector3cd& v_abc_i, const Eigen::Vector3cd& i_abc_i,
                                   const Eigen::Matrix3cd& z_abc, const Eigen::Matrix3cd& y_abc);

/// Balanced three-phase set with the given positive-sequence value.
Eigen::Vector3cd balanced_phases(Phasor ps);

/// Positive-sequence component of a three-phase set.
Phasor positive_sequence_of(const Eigen::Vector3cd& abc);

}  // namespace linecal
