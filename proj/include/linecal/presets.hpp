#pragma once

#include <string>
#include <vector>

#include "linecal/network.hpp"

namespace linecal::presets {

/// 345 kV subsystem of the IEEE 118-bus case: 11 buses, 10 lines, bus 81 as reference.
NetworkModel ieee118_345kv();

/// 12-bus meshed test grid with one parallel pair (L04/L05) and one short
/// line (L15, shunt susceptance 50x smaller than its series data suggests).
NetworkModel desk_mesh();

/// Two buses (81 reference, 68) joined by one transposed 345 kV line with
/// Z = 0.00175 + j0.0202 pu and y = 0.404 pu.
NetworkModel single_line();

/// Two buses joined by one un-transposed 345 kV line described by its phase
/// matrices; r/x/y hold the positive-sequence equivalents in pu.
NetworkModel untransposed_line();

/// Phase matrices of the un-transposed example line, ohms and siemens.
ThreePhaseParams untransposed_line_matrices();

NetworkModel by_name(const std::string& name);
std::vector<std::string> names();

inline const std::string kShortLine = "L15";

}  // namespace linecal::presets
