#include "linecal/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "linecal/presets.hpp"

namespace linecal {

void RunConfig::validate() const {
  if (n_frames < 2) throw ValidationError("need at least two frames", "frames");
  if (portions == 0) throw ValidationError("portion count must be positive", "portions");
  if (portions > n_frames) throw ValidationError("more portions than frames", "portions");
  if (n_frames / portions < 2) throw ValidationError("each portion needs two or more frames", "portions");
  if (quantize && (!(quant_v > 0.0) || !(quant_i > 0.0))) {
    throw ValidationError("quantization scales must be positive", "quant");
  }
  if (!(load_shape.frame_rate > 0.0)) throw ValidationError("frame rate must be positive", "frame_rate");
  if (bounds.magnitude_lo > bounds.magnitude_hi || bounds.angle_lo_deg > bounds.angle_hi_deg ||
      !(bounds.magnitude_lo > 0.0)) {
    throw ValidationError("ratio-error bounds are invalid", "bounds");
  }
}

const char* to_string(LineStatus status) {
  switch (status) {
    case LineStatus::Estimated: return "estimated";
    case LineStatus::Failed: return "failed";
    case LineStatus::Skipped: return "skipped";
  }
  return "unknown";
}

namespace {

double error_pct(double estimate, double truth) { return (estimate - truth) / truth * 100.0; }

}  // namespace

double LineRow::r_error_pct() const { return estimate ? error_pct(estimate->r, r_true) : NAN; }
double LineRow::x_error_pct() const { return estimate ? error_pct(estimate->x, x_true) : NAN; }
double LineRow::y_error_pct() const { return estimate ? error_pct(estimate->y, y_true) : NAN; }

bool CalibrationReport::complete() const {
  return std::all_of(lines.begin(), lines.end(),
                     [](const LineRow& r) { return r.status == LineStatus::Estimated; });
}

std::vector<ChannelKey> network_channels(const NetworkModel& network) {
  std::vector<ChannelKey> out;
  for (const auto& l : network.lines()) {
    for (const auto* bus : {&l.from_bus, &l.to_bus}) {
      out.push_back(ChannelKey::line_voltage(*bus, l.id));
      out.push_back(ChannelKey::line_current(*bus, l.id));
    }
  }
  for (const auto& b : network.buses()) {
    if (b.has_injection) out.push_back(ChannelKey::injection(b.id));
  }
  std::sort(out.begin(), out.end());
  return out;
}

SimulatedMeasurements simulate_measurements(const NetworkModel& network, const RunConfig& config) {
  config.validate();
  SimulatedMeasurements sim;
  LoadShape shape = config.load_shape;
  const auto frames = generate_profiles(network, config.n_frames, config.seed, shape);
  sim.truth = branch_and_injection_currents(network, frames);

  const auto channels = network_channels(network);
  std::map<ChannelKey, RatioError> errors;
  if (config.ratio_errors) errors = sample_ratio_errors(config.seed, config.bounds, channels);
  const std::string& reference = network.reference_bus().id;

  for (const auto& key : channels) {
    ChannelErrorSpec spec;
    spec.key = key;
    const bool accurate = key.bus == reference ||
                          (key.kind == ElementKind::Injection && config.pin_injections);
    spec.ratio_error = (config.ratio_errors && !accurate) ? errors.at(key) : RatioError::identity();
    if (auto it = config.ratio_error_overrides.find(key); it != config.ratio_error_overrides.end()) {
      spec.ratio_error = it->second;
    }
    const bool voltage = key.quantity == Quantity::Voltage;
    spec.base = voltage ? network.v_base(key.bus) : network.i_base(key.bus);
    if (config.quantize) spec.quantization_scale = voltage ? config.quant_v : config.quant_i;

    const BranchEndSeries* end = nullptr;
    if (key.kind == ElementKind::Line) {
      const auto& line = network.line(key.line);
      end = &sim.truth.branch(key.line, line.from_bus == key.bus ? LineEnd::From : LineEnd::To);
    }
    const std::vector<Phasor>& truth =
        end ? (voltage ? end->voltage : end->current) : sim.truth.injections.at(key.bus);

    std::vector<PhaseWeights> weights;
    if (end && end->has_phase_data()) {
      const auto& abc = voltage ? end->voltage_abc : end->current_abc;
      weights.reserve(abc.size());
      for (const auto& v : abc) weights.push_back(phase_weights({v(0), v(1), v(2)}));
    }
    sim.measured[key] = simulate_channel(truth, spec, weights.empty(), weights);
    if (!weights.empty()) sim.weights[key] = std::move(weights);
    sim.true_series[key] = truth;
    sim.true_factors[key] = 1.0 / ps_ratio_error(spec.ratio_error);
    sim.specs.emplace(key, std::move(spec));
  }
  return sim;
}

std::vector<HistogramBin> quantization_histogram(std::span<const Phasor> true_ps,
                                                 const ChannelErrorSpec& spec) {
  if (!spec.quantization_scale) return {};
  const double scale = *spec.quantization_scale;
  const double width = scale / 20.0;
  const int n_bins = 40;  // [-scale, scale)
  static const char* kNames[] = {"VA", "VB", "VC", "VP"};

  std::vector<std::vector<std::size_t>> counts(8, std::vector<std::size_t>(n_bins, 0));
  auto add = [&](std::size_t series, double value) {
    const int bin = static_cast<int>(std::floor((value + scale) / width));
    if (bin >= 0 && bin < n_bins) ++counts[series][static_cast<std::size_t>(bin)];
  };
  for (const auto& v : true_ps) {
    const auto frame = simulate_frame(v, spec);
    for (std::size_t ph = 0; ph < 3; ++ph) {
      const Complex e = frame.measured_phases[ph] - frame.quantized_phases[ph];
      add(2 * ph, e.real());
      add(2 * ph + 1, e.imag());
    }
    const Complex e = positive_sequence(frame.measured_phases) - positive_sequence(frame.quantized_phases);
    add(6, e.real());
    add(7, e.imag());
  }

  std::vector<HistogramBin> out;
  for (std::size_t s = 0; s < 8; ++s) {
    const std::string name = std::string(kNames[s / 2]) + (s % 2 == 0 ? "_real" : "_imag");
    for (int b = 0; b < n_bins; ++b) {
      out.push_back({name, -scale + b * width, -scale + (b + 1) * width,
                     counts[s][static_cast<std::size_t>(b)]});
    }
  }
  return out;
}

namespace {

// Mutable walk state: known factors per channel and which buses are ready.
struct WalkState {
  std::map<ChannelKey, CorrectionFactor> known;
  std::map<ChannelKey, std::string> source;
  std::map<ChannelKey, bool> at_bound;
  std::map<ChannelKey, double> bound_fraction;
  std::set<std::string> calibrated;
};

void calibrate_bus(const NetworkModel& network, const RunConfig& config,
                   const SimulatedMeasurements& sim,
                   const std::map<std::string, std::string>& group_of, const std::string& bus,
                   const std::string& via_line, WalkState& state) {
  const auto via_v = ChannelKey::line_voltage(bus, via_line);
  for (const auto& lid : network.incident_lines(bus)) {
    const auto key = ChannelKey::line_voltage(bus, lid);
    if (state.known.count(key)) continue;
    state.known[key] = propagate_voltage(state.known.at(via_v), sim.measured.at(via_v),
                                         sim.measured.at(key), config.portions);
    state.source[key] = "voltage";
  }

  BusContext ctx{bus, {}};
  for (const auto& lid : network.incident_lines(bus)) {
    const auto key = ChannelKey::line_current(bus, lid);
    CurrentChannel ch{key, sim.measured.at(key), {}, {}};
    if (auto it = state.known.find(key); it != state.known.end()) ch.known = it->second;
    if (auto g = group_of.find(lid); g != group_of.end()) ch.parallel_group = g->second;
    ctx.currents.push_back(std::move(ch));
  }
  if (network.bus(bus).has_injection) {
    const auto key = ChannelKey::injection(bus);
    CurrentChannel ch{key, sim.measured.at(key), {}, {}};
    if (auto it = state.known.find(key); it != state.known.end()) ch.known = it->second;
    ctx.currents.push_back(std::move(ch));
  }
  const bool any_unknown = std::any_of(ctx.currents.begin(), ctx.currents.end(),
                                       [](const CurrentChannel& c) { return !c.known; });
  if (any_unknown) {
    PropagationOptions options;
    options.portions = config.portions;
    options.merge_parallel = config.merge_parallel;
    options.pooled = config.pooled_qp;
    const auto result = propagate_currents(ctx, options);
    for (const auto& f : result.factors) {
      state.known[f.key] = f.factor;
      state.source[f.key] = f.merged ? "current-merged" : "current";
      state.at_bound[f.key] = f.at_bound;
      state.bound_fraction[f.key] = f.portion_bound_fraction;
    }
  }
  state.calibrated.insert(bus);
}

}  // namespace

CalibrationReport run(const RunConfig& config) {
  if (!config.network_path.empty()) {
    auto report = run(load_network(config.network_path), config);
    report.network_source = config.network_path.string();
    return report;
  }
  if (!config.preset.empty()) {
    auto report = run(presets::by_name(config.preset), config);
    report.network_source = "preset:" + config.preset;
    return report;
  }
  throw ValidationError("no network file or preset given", "network");
}

CalibrationReport run(const NetworkModel& network, const RunConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  CalibrationReport report;
  report.config = config;
  report.network_source = "in-memory";

  const auto sim = simulate_measurements(network, config);
  // Echo every channel's ratio error so run.json replays this draw.
  for (const auto& [key, spec] : sim.specs) report.config.ratio_error_overrides[key] = spec.ratio_error;
  const std::string root = network.reference_bus().id;
  report.plan = ebbfs(network, root);

  std::map<std::string, std::string> group_of;
  for (const auto& group : parallel_groups(network)) {
    for (const auto& lid : group) group_of[lid] = group.front();
  }

  WalkState state;
  for (const auto& [key, spec] : sim.specs) {
    if (key.bus == root) {
      state.known[key] = 1.0;
      state.source[key] = "reference";
    } else if (key.kind == ElementKind::Injection && config.pin_injections) {
      state.known[key] = 1.0;
      state.source[key] = "pinned";
    }
  }
  state.calibrated.insert(root);

  // A bus reached over a parallel group is calibrated only after every member
  // has been estimated; an unknown partner would be collinear with the known one.
  std::map<std::string, std::string> pending;  // to-bus -> line that first reached it
  auto same_group = [&](const PlanEntry& a, const PlanEntry& b) {
    return a.from_bus == b.from_bus && a.to_bus == b.to_bus;
  };
  auto flush = [&](std::size_t i, LineRow& row) {
    const auto& entry = report.plan.entries[i];
    auto it = pending.find(entry.to_bus);
    if (it == pending.end()) return;
    if (i + 1 < report.plan.entries.size() && same_group(entry, report.plan.entries[i + 1])) return;
    const std::string via = it->second;
    pending.erase(it);
    try {
      calibrate_bus(network, config, sim, group_of, entry.to_bus, via, state);
    } catch (const Error& e) {
      row.message = "bus " + entry.to_bus + " calibration failed: " + e.what();
    }
  };

  for (std::size_t i = 0; i < report.plan.entries.size(); ++i) {
    const auto& entry = report.plan.entries[i];
    const auto& line = network.line(entry.line);
    LineRow row;
    row.order = i + 1;
    row.entry = entry;
    row.r_true = line.r;
    row.x_true = line.x;
    row.y_true = line.y;
    row.kv_to_true = sim.true_factors.at(ChannelKey::line_voltage(entry.to_bus, line.id));
    row.ki_to_true = sim.true_factors.at(ChannelKey::line_current(entry.to_bus, line.id));

    const auto kv_from = ChannelKey::line_voltage(entry.from_bus, line.id);
    const auto ki_from = ChannelKey::line_current(entry.from_bus, line.id);
    const auto kv_to = ChannelKey::line_voltage(entry.to_bus, line.id);
    const auto ki_to = ChannelKey::line_current(entry.to_bus, line.id);
    if (!state.calibrated.count(entry.from_bus) || !state.known.count(kv_from) ||
        !state.known.count(ki_from)) {
      row.status = LineStatus::Skipped;
      row.message = "from-bus " + entry.from_bus + " is not calibrated";
    } else {
      try {
        LineMeasurements m{sim.measured.at(kv_from), sim.measured.at(kv_to), sim.measured.at(ki_from),
                           sim.measured.at(ki_to), config.portions, 0.0};
        if (config.quantize) {
          // Quantization noise of a positive-sequence phasor: scale^2 / 36 per component.
          const double step = config.quant_i / network.i_base(entry.from_bus);
          m.current_noise_var = 2.0 * step * step / 36.0;
        }
        row.estimate = estimate_line(m, state.known.at(kv_from), state.known.at(ki_from));
        row.status = LineStatus::Estimated;
      } catch (const Error& e) {
        row.status = LineStatus::Failed;
        row.message = std::string("line ") + line.id + ": " + e.what();
      }
    }

    if (row.estimate && !state.calibrated.count(entry.to_bus)) {
      state.known[kv_to] = row.estimate->kv_to;
      state.known[ki_to] = row.estimate->ki_to;
      state.source[kv_to] = "line";
      state.source[ki_to] = "line";
      pending.emplace(entry.to_bus, line.id);
    }
    flush(i, row);
    report.lines.push_back(std::move(row));
  }

  for (const auto& [key, truth] : sim.true_factors) {
    FactorRow f{key, truth, {}, "unresolved", false, 0.0};
    if (auto it = state.known.find(key); it != state.known.end()) {
      f.estimate = it->second;
      f.source = state.source.at(key);
      f.at_bound = state.at_bound.count(key) ? state.at_bound.at(key) : false;
      f.portion_bound_fraction = state.bound_fraction.count(key) ? state.bound_fraction.at(key) : 0.0;
    }
    report.factors.push_back(std::move(f));
  }

  // Quantization-error histogram for the first voltage channel on the reference bus.
  for (const auto& [key, spec] : sim.specs) {
    if (key.bus == root && key.quantity == Quantity::Voltage) {
      report.histogram_channel = key.to_string();
      report.histogram_bin_width = spec.quantization_scale ? *spec.quantization_scale / 20.0 : 0.0;
      report.histogram = quantization_histogram(sim.true_series.at(key), spec);
      break;
    }
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace linecal
