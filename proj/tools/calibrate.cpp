#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "linecal/pipeline.hpp"
#include "linecal/presets.hpp"

namespace {

int do_run(linecal::RunConfig config, const std::string& export_path, bool export_measured) {
  const auto network = !config.network_path.empty() ? linecal::load_network(config.network_path)
                                                    : linecal::presets::by_name(config.preset);
  auto report = linecal::run(network, config);
  report.network_source =
      !config.network_path.empty() ? config.network_path.string() : "preset:" + config.preset;
  linecal::emit_report(report, config.output_dir);
  if (!export_path.empty()) {
    const auto sim = linecal::simulate_measurements(network, config);
    linecal::write_measurements_csv(export_path, sim, export_measured);
  }

  std::size_t estimated = 0;
  for (const auto& row : report.lines) {
    if (row.status == linecal::LineStatus::Estimated) {
      ++estimated;
      const auto& d = row.estimate->diagnostics;
      std::cout << fmt::format("{:>3} {:<10} {:>4}->{:<4} R {:+9.4f}%  X {:+9.4f}%  y {:+9.4f}%{}\n",
                               row.order, row.entry.line, row.entry.from_bus, row.entry.to_bus,
                               row.r_error_pct(), row.x_error_pct(), row.y_error_pct(),
                               d.low_confidence ? "  low-confidence" : "");
    } else {
      std::cout << fmt::format("{:>3} {:<10} {:>4}->{:<4} {}: {}\n", row.order, row.entry.line,
                               row.entry.from_bus, row.entry.to_bus, linecal::to_string(row.status),
                               row.message);
    }
  }
  std::cout << fmt::format("{}/{} lines estimated, reports in {}\n", estimated, report.lines.size(),
                           config.output_dir.string());
  return report.complete() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Line parameter and instrument-transformer calibration from simulated PMU data"};
  app.require_subcommand(1);

  linecal::RunConfig config;
  std::filesystem::path config_path;
  std::string export_path;
  bool export_measured = false;
  bool no_quant = false, no_ratio = false, no_merge = false;

  auto* run = app.add_subcommand("run", "simulate, estimate and write reports");
  run->add_option("--config", config_path, "run config JSON (flags override it)");
  run->add_option("--network", config.network_path, "network JSON file");
  run->add_option("--preset", config.preset, "bundled network when --network is absent");
  run->add_option("--seed", config.seed);
  run->add_option("--frames", config.n_frames);
  run->add_option("--portions", config.portions);
  run->add_option("--quant-v", config.quant_v, "voltage quantization scale, volts");
  run->add_option("--quant-i", config.quant_i, "current quantization scale, amps");
  run->add_option("--out", config.output_dir, "output directory");
  run->add_flag("--no-quant", no_quant, "disable quantization");
  run->add_flag("--no-ratio-errors", no_ratio, "disable CT/PT ratio errors");
  run->add_flag("--pooled-qp", config.pooled_qp, "one QP over all frames per bus");
  run->add_flag("--pin-injections", config.pin_injections, "treat injection channels as accurate");
  run->add_flag("--no-merge", no_merge, "do not merge parallel lines during propagation");
  run->add_option("--export-measurements", export_path, "write the true series to this CSV");
  run->add_flag("--export-measured", export_measured, "include simulated measurements in the export");

  std::string preset;
  std::filesystem::path gen_out;
  auto* gen = app.add_subcommand("gen-network", "write a bundled example network");
  gen->add_option("--preset", preset)->required()->check(CLI::IsMember(linecal::presets::names()));
  gen->add_option("--out", gen_out, "output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto text = linecal::network_to_json(linecal::presets::by_name(preset));
      if (gen_out.empty()) {
        std::cout << text << "\n";
      } else {
        std::ofstream out(gen_out);
        if (!out) throw linecal::Error("cannot write " + gen_out.string());
        out << text << "\n";
      }
      return 0;
    }

    if (!config_path.empty()) {
      // Reparse so command-line flags take precedence over the file.
      auto from_file = linecal::load_run_config(config_path);
      config.ratio_error_overrides = from_file.ratio_error_overrides;
      for (auto* opt : run->get_options()) {
        if (opt->count() > 0) continue;
        const auto& name = opt->get_name();
        if (name == "--network") config.network_path = from_file.network_path;
        else if (name == "--preset") config.preset = from_file.preset;
        else if (name == "--seed") config.seed = from_file.seed;
        else if (name == "--frames") config.n_frames = from_file.n_frames;
        else if (name == "--portions") config.portions = from_file.portions;
        else if (name == "--quant-v") config.quant_v = from_file.quant_v;
        else if (name == "--quant-i") config.quant_i = from_file.quant_i;
        else if (name == "--out") config.output_dir = from_file.output_dir;
        else if (name == "--pooled-qp") config.pooled_qp = from_file.pooled_qp;
        else if (name == "--pin-injections") config.pin_injections = from_file.pin_injections;
        else if (name == "--no-quant") config.quantize = from_file.quantize;
        else if (name == "--no-ratio-errors") config.ratio_errors = from_file.ratio_errors;
        else if (name == "--no-merge") config.merge_parallel = from_file.merge_parallel;
      }
      config.bounds = from_file.bounds;
      config.load_shape = from_file.load_shape;
    }
    if (no_quant) config.quantize = false;
    if (no_ratio) config.ratio_errors = false;
    if (no_merge) config.merge_parallel = false;
    if (config.network_path.empty() && config.preset.empty()) {
      throw linecal::ValidationError("give --network, --preset or --config", "network");
    }
    return do_run(config, export_path, export_measured);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
