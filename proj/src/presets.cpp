#include "linecal/presets.hpp"

namespace linecal::presets {

namespace {

Bases bases_345() {
  Bases bases;
  bases.mva_base = 100.0;
  bases.levels.push_back(bases.for_kv(345.0));
  return bases;
}

std::vector<Bus> buses_345(const std::vector<std::string>& ids, const std::string& reference) {
  std::vector<Bus> out;
  for (const auto& id : ids) out.push_back({id, 345.0, id == reference, true});
  return out;
}

}  // namespace

NetworkModel ieee118_345kv() {
  // Series data on 100 MVA; y is half the total line charging.
  std::vector<Line> lines = {
      {"L068-081", "81", "68", 0.00175, 0.0202, 0.404, {}},
      {"L065-068", "68", "65", 0.00138, 0.0160, 0.319, {}},
      {"L038-065", "65", "38", 0.00901, 0.0986, 0.523, {}},
      {"L064-065", "65", "64", 0.00269, 0.0302, 0.190, {}},
      {"L030-038", "38", "30", 0.00464, 0.0540, 0.211, {}},
      {"L063-064", "64", "63", 0.00172, 0.0200, 0.108, {}},
      {"L008-030", "30", "8", 0.00431, 0.0504, 0.257, {}},
      {"L026-030", "30", "26", 0.00799, 0.0860, 0.454, {}},
      {"L008-009", "8", "9", 0.00244, 0.0305, 0.581, {}},
      {"L009-010", "9", "10", 0.00258, 0.0322, 0.615, {}},
  };
  return NetworkModel::build(
      buses_345({"8", "9", "10", "26", "30", "38", "63", "64", "65", "68", "81"}, "81"),
      std::move(lines), bases_345());
}

NetworkModel desk_mesh() {
  std::vector<Line> lines = {
      {"L01", "1", "2", 0.00175, 0.0202, 0.404, {}},
      {"L02", "1", "3", 0.00138, 0.0160, 0.319, {}},
      {"L03", "2", "3", 0.00244, 0.0305, 0.581, {}},
      {"L04", "2", "4", 0.00258, 0.0322, 0.615, {}},
      {"L05", "2", "4", 0.00258, 0.0322, 0.615, {}},
      {"L06", "3", "5", 0.00431, 0.0504, 0.257, {}},
      {"L07", "4", "5", 0.00269, 0.0302, 0.190, {}},
      {"L08", "4", "6", 0.00464, 0.0540, 0.211, {}},
      {"L09", "5", "7", 0.00799, 0.0860, 0.454, {}},
      {"L10", "6", "7", 0.00172, 0.0200, 0.108, {}},
      {"L11", "6", "8", 0.00244, 0.0305, 0.581, {}},
      {"L12", "7", "9", 0.00138, 0.0160, 0.319, {}},
      {"L13", "8", "9", 0.00258, 0.0322, 0.615, {}},
      {"L14", "8", "10", 0.00431, 0.0504, 0.257, {}},
      {kShortLine, "9", "11", 0.00175, 0.0202, 0.404 / 50.0, {}},
      {"L16", "10", "12", 0.00464, 0.0540, 0.211, {}},
      {"L17", "11", "12", 0.00269, 0.0302, 0.190, {}},
      {"L18", "10", "11", 0.00901, 0.0986, 0.523, {}},
  };
  std::vector<std::string> ids;
  for (int i = 1; i <= 12; ++i) ids.push_back(std::to_string(i));
  return NetworkModel::build(buses_345(ids, "1"), std::move(lines), bases_345());
}

NetworkModel single_line() {
  return NetworkModel::build(buses_345({"81", "68"}, "81"),
                             {{"L1", "81", "68", 0.00175, 0.0202, 0.404, {}}}, bases_345());
}

ThreePhaseParams untransposed_line_matrices() {
  using C = Complex;
  Eigen::Matrix3cd z;
  z << C(8.5922, 61.0128), C(4.1208, 27.6955), C(4.0940, 23.9696),
       C(4.1208, 27.6955), C(8.5131, 61.0865), C(4.0932, 27.7693),
       C(4.0940, 23.9696), C(4.0932, 27.7693), C(8.4612, 61.1171);
  Eigen::Matrix3cd y;
  y << C(0, 1.0913e-4), C(0, -1.6076e-5), C(0, -1.6076e-5),
       C(0, -1.6076e-5), C(0, 1.0544e-4), C(0, -2.4244e-5),
       C(0, -1.6076e-5), C(0, -2.4244e-5), C(0, 1.0544e-4);
  return {z, y};
}

NetworkModel untransposed_line() {
  const auto phase = untransposed_line_matrices();
  const auto [z1, y1] = positive_sequence_parameters(phase.z_abc_ohm, phase.y_abc_siemens);
  const Bases bases = bases_345();
  const auto level = bases.for_kv(345.0);
  const double z_base = level.v_base_volts / level.i_base_amps;
  Line line{"L1", "81", "68", z1.real() / z_base, z1.imag() / z_base, y1.imag() * z_base, phase};
  return NetworkModel::build(buses_345({"81", "68"}, "81"), {line}, bases);
}

NetworkModel by_name(const std::string& name) {
  if (name == "ieee118-345kv") return ieee118_345kv();
  if (name == "desk-mesh") return desk_mesh();
  if (name == "single-line") return single_line();
  if (name == "untransposed-line") return untransposed_line();
  throw ValidationError("unknown preset '" + name + "'", name);
}

std::vector<std::string> names() {
  return {"ieee118-345kv", "desk-mesh", "single-line", "untransposed-line"};
}

}  // namespace linecal::presets
