#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "linecal/error_model.hpp"
#include "linecal/line_estimator.hpp"
#include "linecal/network.hpp"
#include "linecal/propagation.hpp"
#include "linecal/scenario.hpp"
#include "linecal/topology.hpp"

namespace linecal {

struct RunConfig {
  std::filesystem::path network_path;
  std::string preset;  // used when network_path is empty
  std::uint64_t seed = 1;
  std::size_t n_frames = 1800;
  std::size_t portions = 30;
  RatioErrorBounds bounds;
  bool ratio_errors = true;
  bool quantize = true;
  double quant_v = 12.0;  // volts
  double quant_i = 0.65;  // amps
  bool pin_injections = false;
  bool pooled_qp = false;
  bool merge_parallel = true;
  LoadShape load_shape;  // frame rate lives here
  std::filesystem::path output_dir = "out";
  /// Replayed ratio errors; channels listed here skip sampling.
  std::map<ChannelKey, RatioError> ratio_error_overrides;

  /// Throws ValidationError on non-positive numerics or portions > frames.
  void validate() const;
};

/// Every channel's error spec, true series and simulated measurement.
struct SimulatedMeasurements {
  TrueMeasurementSet truth;
  std::map<ChannelKey, ChannelErrorSpec> specs;
  std::map<ChannelKey, std::vector<Phasor>> true_series;
  std::map<ChannelKey, std::vector<Phasor>> measured;
  std::map<ChannelKey, CorrectionFactor> true_factors;
  std::map<ChannelKey, std::vector<PhaseWeights>> weights;  // un-transposed ends only
};

/// All channels of a network in sorted order: V and I at both ends of every
/// line, plus one injection current per bus that has one.
std::vector<ChannelKey> network_channels(const NetworkModel& network);

SimulatedMeasurements simulate_measurements(const NetworkModel& network, const RunConfig& config);

enum class LineStatus { Estimated, Failed, Skipped };
const char* to_string(LineStatus status);

struct LineRow {
  std::size_t order = 0;
  PlanEntry entry;
  LineStatus status = LineStatus::Skipped;
  std::string message;
  double r_true = 0.0, x_true = 0.0, y_true = 0.0;
  CorrectionFactor kv_to_true, ki_to_true;
  std::optional<LineEstimate> estimate;

  double r_error_pct() const;
  double x_error_pct() const;
  double y_error_pct() const;
};

struct FactorRow {
  ChannelKey key;
  CorrectionFactor truth;
  std::optional<CorrectionFactor> estimate;
  std::string source;  // reference, pinned, line, voltage, current, current-merged, unresolved
  bool at_bound = false;
  double portion_bound_fraction = 0.0;
};

struct HistogramBin {
  std::string series;  // VA_real, VA_imag, ..., VP_real, VP_imag
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

struct CalibrationReport {
  RunConfig config;
  std::string network_source;
  VisitPlan plan;
  std::vector<LineRow> lines;
  std::vector<FactorRow> factors;
  std::string histogram_channel;
  double histogram_bin_width = 0.0;
  std::vector<HistogramBin> histogram;
  double wall_seconds = 0.0;

  bool complete() const;
};

/// Simulate, walk the EBBFS plan from the reference bus, estimate each line
/// and calibrate each newly reached bus. Per-line failures are recorded in
/// the report; lines whose from-bus never gets calibrated are skipped.
CalibrationReport run(const RunConfig& config);
CalibrationReport run(const NetworkModel& network, const RunConfig& config);

/// Quantization-error histogram (volts) of one voltage channel: three phases
/// and the positive sequence, real and imaginary parts, bin width scale / 20.
std::vector<HistogramBin> quantization_histogram(std::span<const Phasor> true_ps,
                                                 const ChannelErrorSpec& spec);

/// Writes report.csv, factors.csv, plan.csv, errors_hist.csv and run.json.
void emit_report(const CalibrationReport& report, const std::filesystem::path& dir);

/// Long-format CSV of true and simulated series, one row per channel and frame.
void write_measurements_csv(const std::filesystem::path& path, const SimulatedMeasurements& sim,
                            bool include_measured);

RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& config,
                               const std::map<ChannelKey, ChannelErrorSpec>* specs = nullptr);

}  // namespace linecal
