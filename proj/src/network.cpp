#include "linecal/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace linecal {

using json = nlohmann::json;

std::string ChannelKey::to_string() const {
  const char* q = quantity == Quantity::Voltage ? "V" : "I";
  if (kind == ElementKind::Injection) return bus + "/inj/" + q;
  return bus + "/" + line + "/" + q;
}

LevelBase Bases::for_kv(double kv) const {
  for (const auto& level : levels) {
    if (std::abs(level.kv - kv) <= 1e-9 * std::max(1.0, kv)) return level;
  }
  const double sqrt3 = std::sqrt(3.0);
  return {kv, kv * 1e3 / sqrt3, mva_base * 1e6 / (sqrt3 * kv * 1e3)};
}

namespace {

bool is_symmetric(const Eigen::Matrix3cd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

}  // namespace

NetworkModel NetworkModel::build(std::vector<Bus> buses, std::vector<Line> lines, Bases bases) {
  NetworkModel model;
  if (!(bases.mva_base > 0.0)) throw ValidationError("mva_base must be positive", "bases");
  for (const auto& level : bases.levels) {
    if (!(level.kv > 0.0) || !(level.v_base_volts > 0.0) || !(level.i_base_amps > 0.0)) {
      throw ValidationError("non-positive base quantity", "bases");
    }
  }

  std::size_t n_reference = 0;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const auto& b = buses[i];
    if (b.id.empty()) throw ValidationError("bus with empty id", "");
    if (!model.bus_index_.emplace(b.id, i).second) {
      throw ValidationError("duplicate bus id '" + b.id + "'", b.id);
    }
    if (!(b.voltage_base_kv > 0.0)) {
      throw ValidationError("bus '" + b.id + "' has non-positive voltage base", b.id);
    }
    if (b.is_reference) {
      ++n_reference;
      model.reference_index_ = i;
    }
  }
  if (buses.empty()) throw ValidationError("network has no buses", "");
  if (n_reference != 1) {
    throw ValidationError("network must have exactly one reference bus, found " +
                              std::to_string(n_reference),
                          n_reference == 0 ? "" : buses[model.reference_index_].id);
  }

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& l = lines[i];
    if (l.id.empty()) throw ValidationError("line with empty id", "");
    if (!model.line_index_.emplace(l.id, i).second) {
      throw ValidationError("duplicate line id '" + l.id + "'", l.id);
    }
    for (const auto* end : {&l.from_bus, &l.to_bus}) {
      if (!model.bus_index_.count(*end)) {
        throw ValidationError("line '" + l.id + "' references unknown bus '" + *end + "'", l.id);
      }
    }
    if (l.from_bus == l.to_bus) throw ValidationError("line '" + l.id + "' is a self loop", l.id);
    if (!(l.x > 0.0)) throw ValidationError("line '" + l.id + "' needs x > 0", l.id);
    if (!(l.y >= 0.0)) throw ValidationError("line '" + l.id + "' needs y >= 0", l.id);
    if (!std::isfinite(l.r)) throw ValidationError("line '" + l.id + "' has non-finite r", l.id);
    const double kv_from = buses[model.bus_index_.at(l.from_bus)].voltage_base_kv;
    const double kv_to = buses[model.bus_index_.at(l.to_bus)].voltage_base_kv;
    if (std::abs(kv_from - kv_to) > 1e-9 * kv_from) {
      throw ValidationError("line '" + l.id + "' joins different voltage levels", l.id);
    }
    if (l.three_phase && (!is_symmetric(l.three_phase->z_abc_ohm) ||
                          !is_symmetric(l.three_phase->y_abc_siemens))) {
      throw ValidationError("line '" + l.id + "' has non-symmetric phase matrices", l.id);
    }
    model.incident_[l.from_bus].push_back(l.id);
    model.incident_[l.to_bus].push_back(l.id);
  }
  for (auto& [bus, ids] : model.incident_) std::sort(ids.begin(), ids.end());

  // Connectivity over lines.
  std::set<std::string> seen{buses[model.reference_index_].id};
  std::deque<std::string> queue{buses[model.reference_index_].id};
  while (!queue.empty()) {
    const auto current = queue.front();
    queue.pop_front();
    auto it = model.incident_.find(current);
    if (it == model.incident_.end()) continue;
    for (const auto& lid : it->second) {
      const auto& other = lines[model.line_index_.at(lid)].other_end(current);
      if (seen.insert(other).second) queue.push_back(other);
    }
  }
  for (const auto& b : buses) {
    if (!seen.count(b.id)) {
      throw ValidationError("network is disconnected: bus '" + b.id + "' is unreachable", b.id);
    }
  }

  model.buses_ = std::move(buses);
  model.lines_ = std::move(lines);
  model.bases_ = std::move(bases);
  return model;
}

const Bus& NetworkModel::bus(const std::string& id) const {
  auto it = bus_index_.find(id);
  if (it == bus_index_.end()) throw ValidationError("unknown bus '" + id + "'", id);
  return buses_[it->second];
}

const Line& NetworkModel::line(const std::string& id) const {
  auto it = line_index_.find(id);
  if (it == line_index_.end()) throw ValidationError("unknown line '" + id + "'", id);
  return lines_[it->second];
}

const std::vector<std::string>& NetworkModel::incident_lines(const std::string& bus) const {
  static const std::vector<std::string> kNone;
  auto it = incident_.find(bus);
  return it == incident_.end() ? kNone : it->second;
}

double NetworkModel::v_base(const std::string& bus_id) const {
  return bases_.for_kv(bus(bus_id).voltage_base_kv).v_base_volts;
}

double NetworkModel::i_base(const std::string& bus_id) const {
  return bases_.for_kv(bus(bus_id).voltage_base_kv).i_base_amps;
}

// ---------------------------------------------------------------------------
// File format

namespace {

std::string id_of(const json& j, const char* field) {
  if (!j.contains(field)) throw ParseError(std::string("missing field '") + field + "'");
  const auto& v = j.at(field);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(std::string("field '") + field + "' must be a string or integer");
}

double number_of(const json& j, const char* field) {
  if (!j.contains(field) || !j.at(field).is_number()) {
    throw ParseError(std::string("missing or non-numeric field '") + field + "'");
  }
  return j.at(field).get<double>();
}

Eigen::Matrix3cd matrix_of(const json& j, const std::string& line_id, const char* field) {
  const auto& rows = j.at(field);
  if (!rows.is_array() || rows.size() != 3) {
    throw ParseError("line '" + line_id + "': " + field + " must be 3x3");
  }
  Eigen::Matrix3cd m;
  for (int r = 0; r < 3; ++r) {
    if (!rows[r].is_array() || rows[r].size() != 3) {
      throw ParseError("line '" + line_id + "': " + field + " must be 3x3");
    }
    for (int c = 0; c < 3; ++c) {
      const auto& e = rows[r][c];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        throw ParseError("line '" + line_id + "': " + field + " entries are [re, im] pairs");
      }
      m(r, c) = {e[0].get<double>(), e[1].get<double>()};
    }
  }
  return m;
}

json matrix_to_json(const Eigen::Matrix3cd& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) {
    json row = json::array();
    for (int c = 0; c < 3; ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

NetworkModel parse_network(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("network file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("buses") || !doc.contains("lines")) {
    throw ParseError("network file needs top-level 'buses' and 'lines'");
  }

  std::vector<Bus> buses;
  for (const auto& jb : doc.at("buses")) {
    Bus b;
    b.id = id_of(jb, "id");
    b.voltage_base_kv = number_of(jb, "voltage_base_kv");
    b.is_reference = jb.value("is_reference", false);
    b.has_injection = jb.value("injection", true);
    buses.push_back(std::move(b));
  }

  std::vector<Line> lines;
  for (const auto& jl : doc.at("lines")) {
    Line l;
    l.id = id_of(jl, "id");
    l.from_bus = id_of(jl, "from");
    l.to_bus = id_of(jl, "to");
    l.r = number_of(jl, "r_pu");
    l.x = number_of(jl, "x_pu");
    l.y = number_of(jl, "y_pu");
    const bool has_z = jl.contains("z_abc_ohm");
    const bool has_y = jl.contains("y_abc_siemens");
    if (has_z != has_y) {
      throw ParseError("line '" + l.id + "': z_abc_ohm and y_abc_siemens must appear together");
    }
    if (has_z) {
      l.three_phase = ThreePhaseParams{matrix_of(jl, l.id, "z_abc_ohm"),
                                       matrix_of(jl, l.id, "y_abc_siemens")};
    }
    lines.push_back(std::move(l));
  }

  Bases bases;
  if (doc.contains("bases")) {
    const auto& jbases = doc.at("bases");
    bases.mva_base = jbases.value("mva_base", 100.0);
    if (jbases.contains("levels")) {
      for (const auto& jl : jbases.at("levels")) {
        bases.levels.push_back(
            {number_of(jl, "kv"), number_of(jl, "v_base_volts"), number_of(jl, "i_base_amps")});
      }
    }
  }
  // Populate a level entry for every kV in use so reports show the bases applied.
  for (const auto& b : buses) {
    bool present = false;
    for (const auto& level : bases.levels) present |= std::abs(level.kv - b.voltage_base_kv) < 1e-9;
    if (!present && b.voltage_base_kv > 0.0) bases.levels.push_back(bases.for_kv(b.voltage_base_kv));
  }

  return NetworkModel::build(std::move(buses), std::move(lines), std::move(bases));
}

NetworkModel load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open network file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_network(buffer.str());
}

std::string network_to_json(const NetworkModel& network) {
  json doc;
  doc["buses"] = json::array();
  for (const auto& b : network.buses()) {
    doc["buses"].push_back({{"id", b.id},
                            {"voltage_base_kv", b.voltage_base_kv},
                            {"is_reference", b.is_reference},
                            {"injection", b.has_injection}});
  }
  doc["lines"] = json::array();
  for (const auto& l : network.lines()) {
    json jl = {{"id", l.id}, {"from", l.from_bus}, {"to", l.to_bus},
               {"r_pu", l.r}, {"x_pu", l.x},         {"y_pu", l.y}};
    if (l.three_phase) {
      jl["z_abc_ohm"] = matrix_to_json(l.three_phase->z_abc_ohm);
      jl["y_abc_siemens"] = matrix_to_json(l.three_phase->y_abc_siemens);
    }
    doc["lines"].push_back(std::move(jl));
  }
  json levels = json::array();
  for (const auto& level : network.bases().levels) {
    levels.push_back({{"kv", level.kv},
                      {"v_base_volts", level.v_base_volts},
                      {"i_base_amps", level.i_base_amps}});
  }
  doc["bases"] = {{"mva_base", network.bases().mva_base}, {"levels", levels}};
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Pi-section model

Eigen::Matrix2cd impedance_matrix(Complex z, Complex y) {
  if (y == Complex{}) {
    throw DegenerateModelError(
        "impedance matrix is singular at y = 0; use terminal_currents for such lines");
  }
  const Complex w = 1.0 + z * y;
  const Complex scale = 1.0 / (y * (2.0 + z * y));
  Eigen::Matrix2cd m;
  m << w, 1.0, 1.0, w;
  return scale * m;
}

std::pair<Phasor, Phasor> terminal_currents(Complex z, Complex y, Phasor v_i, Phasor v_j) {
  if (z == Complex{}) throw ValidationError("series impedance must be nonzero", "");
  const Complex w = 1.0 + z * y;
  return {(w * v_i - v_j) / z, (w * v_j - v_i) / z};
}

std::pair<Complex, Complex> positive_sequence_parameters(const Eigen::Matrix3cd& z_abc,
                                                         const Eigen::Matrix3cd& y_abc) {
  auto project = [](const Eigen::Matrix3cd& m) {
    const Complex self = m.diagonal().sum() / 3.0;
    const Complex mutual = (m(0, 1) + m(0, 2) + m(1, 2)) / 3.0;
    return self - mutual;
  };
  return {project(z_abc), project(y_abc)};
}

}  // namespace linecal
