#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "linecal/types.hpp"

namespace linecal {

struct Bus {
  std::string id;
  double voltage_base_kv = 0.0;  // line-to-line nominal
  bool is_reference = false;
  bool has_injection = true;
};

/// Phase-domain data for an un-transposed line, physical units.
struct ThreePhaseParams {
  Eigen::Matrix3cd z_abc_ohm;
  Eigen::Matrix3cd y_abc_siemens;  // shunt admittance at each terminal
};

struct Line {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  double r = 0.0;  // pu
  double x = 0.0;  // pu
  double y = 0.0;  // pu shunt susceptance per terminal (half of total charging)
  std::optional<ThreePhaseParams> three_phase;

  Complex series_impedance() const { return {r, x}; }
  Complex shunt_admittance() const { return {0.0, y}; }
  const std::string& other_end(const std::string& bus) const {
    return bus == from_bus ? to_bus : from_bus;
  }
};

/// Per-phase (line-to-neutral) base quantities for one voltage level.
struct LevelBase {
  double kv = 0.0;
  double v_base_volts = 0.0;
  double i_base_amps = 0.0;
};

struct Bases {
  double mva_base = 100.0;
  std::vector<LevelBase> levels;

  /// Base for a nominal level. Levels absent from the file get the standard
  /// kV/sqrt(3) and MVA/(sqrt(3) kV) values.
  LevelBase for_kv(double kv) const;
};

/// Immutable, validated grid description. Construct through `build` or
/// `load_network`; both enforce every structural invariant.
class NetworkModel {
 public:
  static NetworkModel build(std::vector<Bus> buses, std::vector<Line> lines, Bases bases);

  const std::vector<Bus>& buses() const noexcept { return buses_; }
  const std::vector<Line>& lines() const noexcept { return lines_; }
  const Bases& bases() const noexcept { return bases_; }

  const Bus& bus(const std::string& id) const;
  const Line& line(const std::string& id) const;
  bool has_bus(const std::string& id) const { return bus_index_.count(id) != 0; }
  const Bus& reference_bus() const { return buses_[reference_index_]; }

  /// Ids of lines touching `bus`, sorted lexicographically.
  const std::vector<std::string>& incident_lines(const std::string& bus) const;

  double v_base(const std::string& bus) const;
  double i_base(const std::string& bus) const;

 private:
  NetworkModel() = default;

  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  Bases bases_;
  std::map<std::string, std::size_t> bus_index_;
  std::map<std::string, std::size_t> line_index_;
  std::map<std::string, std::vector<std::string>> incident_;
  std::size_t reference_index_ = 0;
};

NetworkModel load_network(const std::filesystem::path& path);
NetworkModel parse_network(const std::string& text);
std::string network_to_json(const NetworkModel& network);

/// Open-circuit impedance matrix of the pi section, mapping terminal currents
/// to terminal voltages. Singular at y = 0; only used for oracles and tests.
Eigen::Matrix2cd impedance_matrix(Complex z, Complex y);

/// Currents flowing from each bus into the line (admittance form, valid at y = 0).
std::pair<Phasor, Phasor> terminal_currents(Complex z, Complex y, Phasor v_i, Phasor v_j);

/// Positive-sequence series impedance and per-terminal shunt admittance of
/// symmetric phase matrices: Z1 = mean(diag) - mean(offdiag).
std::pair<Complex, Complex> positive_sequence_parameters(const Eigen::Matrix3cd& z_abc,
                                                         const Eigen::Matrix3cd& y_abc);

}  // namespace linecal
