#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "linecal/pipeline.hpp"

namespace linecal {

using json = nlohmann::json;

namespace {

std::string num(double v) { return std::isfinite(v) ? fmt::format("{:.17g}", v) : ""; }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

ChannelKey parse_key(const std::string& text) {
  const auto a = text.find('/');
  const auto b = text.find('/', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos) {
    throw ParseError("bad channel key '" + text + "'");
  }
  const std::string bus = text.substr(0, a);
  const std::string mid = text.substr(a + 1, b - a - 1);
  const std::string q = text.substr(b + 1);
  if (mid == "inj" && q == "I") return ChannelKey::injection(bus);
  if (q == "V") return ChannelKey::line_voltage(bus, mid);
  if (q == "I") return ChannelKey::line_current(bus, mid);
  throw ParseError("bad channel key '" + text + "'");
}

json ratio_error_json(const RatioError& re) {
  return {{"magnitude", re.magnitude}, {"angle_deg", re.angle_deg}};
}

}  // namespace

std::string run_config_to_json(const RunConfig& c,
                               const std::map<ChannelKey, ChannelErrorSpec>* specs) {
  json doc = {
      {"network", c.network_path.string()},
      {"preset", c.preset},
      {"seed", c.seed},
      {"frames", c.n_frames},
      {"portions", c.portions},
      {"bounds",
       {{"magnitude_lo", c.bounds.magnitude_lo},
        {"magnitude_hi", c.bounds.magnitude_hi},
        {"angle_lo_deg", c.bounds.angle_lo_deg},
        {"angle_hi_deg", c.bounds.angle_hi_deg}}},
      {"ratio_errors", c.ratio_errors},
      {"quantize", c.quantize},
      {"quant_v", c.quant_v},
      {"quant_i", c.quant_i},
      {"pin_injections", c.pin_injections},
      {"pooled_qp", c.pooled_qp},
      {"merge_parallel", c.merge_parallel},
      {"output_dir", c.output_dir.string()},
      {"load_shape",
       {{"ramp_enabled", c.load_shape.ramp_enabled},
        {"ramp_start", c.load_shape.ramp_start},
        {"ramp_end", c.load_shape.ramp_end},
        {"magnitude_std", c.load_shape.magnitude_std},
        {"angle_spread_deg", c.load_shape.angle_spread_deg},
        {"angle_jitter_deg", c.load_shape.angle_jitter_deg},
        {"frame_rate", c.load_shape.frame_rate},
        {"magnitude_floor", c.load_shape.magnitude_floor},
        {"magnitude_ceiling", c.load_shape.magnitude_ceiling}}},
  };
  json overrides = json::object();
  for (const auto& [key, re] : c.ratio_error_overrides) overrides[key.to_string()] = ratio_error_json(re);
  if (specs) {
    for (const auto& [key, spec] : *specs) overrides[key.to_string()] = ratio_error_json(spec.ratio_error);
  }
  doc["ratio_errors_by_channel"] = overrides;
  return doc.dump(2);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  RunConfig c;
  try {
    if (doc.contains("network")) c.network_path = doc["network"].get<std::string>();
    c.preset = doc.value("preset", c.preset);
    c.seed = doc.value("seed", c.seed);
    c.n_frames = doc.value("frames", c.n_frames);
    c.portions = doc.value("portions", c.portions);
    if (doc.contains("bounds")) {
      const auto& b = doc["bounds"];
      c.bounds.magnitude_lo = b.value("magnitude_lo", c.bounds.magnitude_lo);
      c.bounds.magnitude_hi = b.value("magnitude_hi", c.bounds.magnitude_hi);
      c.bounds.angle_lo_deg = b.value("angle_lo_deg", c.bounds.angle_lo_deg);
      c.bounds.angle_hi_deg = b.value("angle_hi_deg", c.bounds.angle_hi_deg);
    }
    c.ratio_errors = doc.value("ratio_errors", c.ratio_errors);
    c.quantize = doc.value("quantize", c.quantize);
    c.quant_v = doc.value("quant_v", c.quant_v);
    c.quant_i = doc.value("quant_i", c.quant_i);
    c.pin_injections = doc.value("pin_injections", c.pin_injections);
    c.pooled_qp = doc.value("pooled_qp", c.pooled_qp);
    c.merge_parallel = doc.value("merge_parallel", c.merge_parallel);
    if (doc.contains("output_dir")) c.output_dir = doc["output_dir"].get<std::string>();
    if (doc.contains("load_shape")) {
      const auto& s = doc["load_shape"];
      auto& l = c.load_shape;
      l.ramp_enabled = s.value("ramp_enabled", l.ramp_enabled);
      l.ramp_start = s.value("ramp_start", l.ramp_start);
      l.ramp_end = s.value("ramp_end", l.ramp_end);
      l.magnitude_std = s.value("magnitude_std", l.magnitude_std);
      l.angle_spread_deg = s.value("angle_spread_deg", l.angle_spread_deg);
      l.angle_jitter_deg = s.value("angle_jitter_deg", l.angle_jitter_deg);
      l.frame_rate = s.value("frame_rate", l.frame_rate);
      l.magnitude_floor = s.value("magnitude_floor", l.magnitude_floor);
      l.magnitude_ceiling = s.value("magnitude_ceiling", l.magnitude_ceiling);
    }
    if (doc.contains("ratio_errors_by_channel")) {
      for (const auto& [name, value] : doc["ratio_errors_by_channel"].items()) {
        RatioError re;
        re.magnitude = value.at("magnitude").get<std::array<double, 3>>();
        re.angle_deg = value.at("angle_deg").get<std::array<double, 3>>();
        c.ratio_error_overrides[parse_key(name)] = re;
      }
    }
  } catch (const json::exception& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

void emit_report(const CalibrationReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  auto lines = open_out(dir / "report.csv");
  lines << "order,line,from_bus,to_bus,level,status,r_true,r_est,r_err_pct,x_true,x_est,x_err_pct,"
           "y_true,y_est,y_err_pct,low_confidence,max_condition,y_spread,attenuation,kv_to_true_re,kv_to_true_im,"
           "kv_to_est_re,kv_to_est_im,ki_to_true_re,ki_to_true_im,ki_to_est_re,ki_to_est_im,message\n";
  for (const auto& r : report.lines) {
    const auto& e = r.estimate;
    const double nan = NAN;
    lines << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},\"{}\"\n",
                         r.order, r.entry.line, r.entry.from_bus, r.entry.to_bus, r.entry.level,
                         to_string(r.status), num(r.r_true), num(e ? e->r : nan), num(r.r_error_pct()),
                         num(r.x_true), num(e ? e->x : nan), num(r.x_error_pct()), num(r.y_true),
                         num(e ? e->y : nan), num(r.y_error_pct()),
                         e ? (e->diagnostics.low_confidence ? "1" : "0") : "",
                         num(e ? e->diagnostics.max_condition : nan),
                         num(e ? e->diagnostics.susceptance_spread : nan),
                         num(e ? e->diagnostics.attenuation : nan), num(r.kv_to_true.real()),
                         num(r.kv_to_true.imag()), num(e ? e->kv_to.real() : nan),
                         num(e ? e->kv_to.imag() : nan), num(r.ki_to_true.real()),
                         num(r.ki_to_true.imag()), num(e ? e->ki_to.real() : nan),
                         num(e ? e->ki_to.imag() : nan), r.message);
  }

  auto factors = open_out(dir / "factors.csv");
  factors << "channel,bus,element,line,quantity,true_re,true_im,est_re,est_im,abs_err,source,at_bound,portion_bound_fraction\n";
  for (const auto& f : report.factors) {
    const bool inj = f.key.kind == ElementKind::Injection;
    factors << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", f.key.to_string(), f.key.bus,
                           inj ? "injection" : "line", inj ? "" : f.key.line,
                           f.key.quantity == Quantity::Voltage ? "V" : "I", num(f.truth.real()),
                           num(f.truth.imag()), f.estimate ? num(f.estimate->real()) : "",
                           f.estimate ? num(f.estimate->imag()) : "",
                           f.estimate ? num(std::abs(*f.estimate - f.truth)) : "", f.source,
                           f.at_bound ? 1 : 0, num(f.portion_bound_fraction));
  }

  auto plan = open_out(dir / "plan.csv");
  plan << "order,line,from_bus,to_bus,level,calibrates_to_bus\n";
  for (std::size_t i = 0; i < report.plan.entries.size(); ++i) {
    const auto& e = report.plan.entries[i];
    const auto it = report.plan.first_calibration.find(e.to_bus);
    const bool first = it != report.plan.first_calibration.end() && it->second == i;
    plan << fmt::format("{},{},{},{},{},{}\n", i + 1, e.line, e.from_bus, e.to_bus, e.level, first ? 1 : 0);
  }

  auto hist = open_out(dir / "errors_hist.csv");
  hist << "channel,series,bin_lo,bin_hi,count\n";
  for (const auto& b : report.histogram) {
    hist << fmt::format("{},{},{},{},{}\n", report.histogram_channel, b.series, num(b.lo), num(b.hi),
                        b.count);
  }

  json summary = json::parse(run_config_to_json(report.config));
  summary["network_source"] = report.network_source;
  summary["wall_seconds"] = report.wall_seconds;
  summary["complete"] = report.complete();
  json errors = json::object();
  for (const auto& f : report.factors) {
    errors[f.key.to_string()] = {{"true_factor", {f.truth.real(), f.truth.imag()}}};
  }
  summary["true_factors"] = errors;
  auto run = open_out(dir / "run.json");
  run << summary.dump(2) << "\n";
}

void write_measurements_csv(const std::filesystem::path& path, const SimulatedMeasurements& sim,
                            bool include_measured) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = open_out(path);
  out << "frame,time_s,bus,element,quantity,re,im,is_truth\n";
  const auto& times = sim.truth.frames.frame_times;
  auto dump = [&](const ChannelKey& key, const std::vector<Phasor>& series, int truth) {
    const bool inj = key.kind == ElementKind::Injection;
    const char* q = key.quantity == Quantity::Voltage ? "V" : "I";
    for (std::size_t k = 0; k < series.size(); ++k) {
      out << fmt::format("{},{},{},{},{},{},{},{}\n", k, num(times[k]), key.bus,
                         inj ? std::string("injection") : key.line, q, num(series[k].real()),
                         num(series[k].imag()), truth);
    }
  };
  for (const auto& [key, series] : sim.true_series) dump(key, series, 1);
  if (include_measured) {
    for (const auto& [key, series] : sim.measured) dump(key, series, 0);
  }
}

}  // namespace linecal
