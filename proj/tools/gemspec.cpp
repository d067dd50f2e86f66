// gemspec: spectrum-to-position converter simulator.
//
//   gemspec limits  [--config cfg.json] [--out dir]
//   gemspec scan    --out dir [--mask ideal|wrapped|blurred|calib|zero|image:<png>]
//                   [--kappa "2pi*20.4 mm^-1"] [--steps 40] [--span "1.6 MHz"] [--epsilon "450 kHz"]
//   gemspec detect  --in scan_dir --out dir [--frames 2000] [--seed 1]
//   gemspec analyze --in detect_dir --out dir --mode fisher|bootstrap|line|resolve [--epsilon "450 kHz"]
//
// The config path defaults to $GEMSPEC_CONFIG, then to the bundled paper_defaults profile.

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gemspec/app/commands.hpp"

using namespace gemspec;

namespace {

std::optional<double> parse_optional(const std::string& text, QuantityKind kind) {
  if (text.empty()) return std::nullopt;
  return parse_quantity(text, kind);
}

// Frequencies on the command line are ordinary ("450 kHz" or "2pi*450 kHz" both
// mean 2pi x 450 kHz internally); rad/s is accepted as well.
std::optional<double> parse_angular_frequency(const std::string& text) {
  if (text.empty()) return std::nullopt;
  if (text == "0") return 0.0;  // zero needs no unit
  const std::string_view s = text;
  if (s.starts_with("2pi") || s.starts_with("2*pi") || s.starts_with("2π")) return parse_quantity(text, QuantityKind::angular_rate);
  return units::angular(parse_quantity(text, QuantityKind::frequency));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and analysis toolkit for a gradient-echo-memory spectrum-to-position converter"};
  app.set_version_flag("--version", GEMSPEC_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "configuration JSON (default: $GEMSPEC_CONFIG, then paper_defaults)");

  auto* limits = app.add_subcommand("limits", "print bandwidth, efficiency chain and resolution limits");
  std::string limits_out;
  limits->add_option("--out", limits_out, "directory for limits.json and manifest.json");

  auto* scan = app.add_subcommand("scan", "far-field angular spectrum for a frequency scan");
  std::string scan_out, mask = "ideal", kappa, span, epsilon;
  std::optional<std::size_t> steps;
  scan->add_option("--out", scan_out, "output directory")->required();
  scan->add_option("--mask", mask, "ideal | wrapped | blurred | calib | zero | image:<png>")->capture_default_str();
  scan->add_option("--kappa", kappa, "prism wavevector scale, e.g. \"2pi*20.4 mm^-1\"");
  scan->add_option("--steps", steps, "number of detunings (config default 40)");
  scan->add_option("--span", span, "scan span, e.g. \"1.6 MHz\"");
  scan->add_option("--epsilon", epsilon, "two-peak input with this separation, e.g. \"450 kHz\"");

  auto* detect = app.add_subcommand("detect", "Monte-Carlo camera frames for every scan row");
  std::string detect_in, detect_out;
  std::size_t frames = 2000;
  std::optional<std::uint64_t> seed;
  detect->add_option("--in", detect_in, "scan directory or spectrum.json")->required();
  detect->add_option("--out", detect_out, "output directory")->required();
  detect->add_option("--frames", frames, "frames per detuning")->capture_default_str();
  detect->add_option("--seed", seed, "root seed (config default camera.seed)");

  auto* analyze = app.add_subcommand("analyze", "estimation reports from detected frames");
  std::string analyze_in, analyze_out, mode, analyze_eps;
  std::size_t n_samples = 100, per_sample = 500;
  std::uint64_t boot_seed = 1;
  analyze->add_option("--in", analyze_in, "detect directory")->required();
  analyze->add_option("--out", analyze_out, "output directory")->required();
  analyze->add_option("--mode", mode, "fisher | bootstrap | line | resolve")
      ->required()
      ->check(CLI::IsMember({"fisher", "bootstrap", "line", "resolve"}));
  analyze->add_option("--epsilon", analyze_eps, "two-peak separation, e.g. \"450 kHz\"");
  analyze->add_option("--samples", n_samples, "bootstrap resamples")->capture_default_str();
  analyze->add_option("--frames-per-sample", per_sample, "frames per bootstrap resample")->capture_default_str();
  analyze->add_option("--seed", boot_seed, "bootstrap seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  RunManifest manifest;
  std::optional<fs::path> out_dir;
  nlohmann::json flags = nlohmann::json::object();
  if (!config_path.empty()) flags["config"] = config_path;

  auto with_settings = [&](auto&& body) {
    return [&, body](RunManifest& m) {
      const auto settings = resolve_settings(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path));
      m.config = settings_to_json(settings);
      body(settings, m);
    };
  };

  if (limits->parsed()) {
    manifest.subcommand = "limits";
    if (!limits_out.empty()) out_dir = limits_out;
    manifest.flags = flags;
    return run_with_manifest(manifest, out_dir, with_settings([&](const Settings& s, RunManifest& m) {
      if (out_dir) fs::create_directories(*out_dir);
      cmd_limits(s, out_dir, m);
    }));
  }

  if (scan->parsed()) {
    manifest.subcommand = "scan";
    out_dir = scan_out;
    flags["mask"] = mask;
    if (!kappa.empty()) flags["kappa"] = kappa;
    if (steps) flags["steps"] = *steps;
    if (!span.empty()) flags["span"] = span;
    if (!epsilon.empty()) flags["epsilon"] = epsilon;
    manifest.flags = flags;
    return run_with_manifest(manifest, out_dir, with_settings([&](const Settings& s, RunManifest& m) {
      ScanRequest req;
      req.mask = mask;
      req.kappa = parse_optional(kappa, QuantityKind::wavenumber);
      req.steps = steps;
      req.span = parse_angular_frequency(span);
      req.epsilon = parse_angular_frequency(epsilon);
      const auto result = cmd_scan(s, req, *out_dir, m);
      std::printf("scan: %zu detunings x %zu angles, mask %s -> %s\n", result.spectrum.rows(), result.spectrum.cols(),
                  result.spectrum.mask.c_str(), out_dir->string().c_str());
    }));
  }

  if (detect->parsed()) {
    manifest.subcommand = "detect";
    out_dir = detect_out;
    flags["in"] = detect_in;
    flags["frames"] = frames;
    if (seed) flags["seed"] = *seed;
    manifest.flags = flags;
    return run_with_manifest(manifest, out_dir, with_settings([&](const Settings& base, RunManifest& m) {
      Settings s = base;
      if (seed) s.camera.seed = *seed;
      m.seed = s.camera.seed;
      m.config = settings_to_json(s);
      cmd_detect(s, detect_in, frames, *out_dir, m);
      std::printf("detect: %zu frames per detuning -> %s\n", frames, out_dir->string().c_str());
    }));
  }

  manifest.subcommand = "analyze";
  out_dir = analyze_out;
  flags["in"] = analyze_in;
  flags["mode"] = mode;
  if (!analyze_eps.empty()) flags["epsilon"] = analyze_eps;
  flags["samples"] = n_samples;
  flags["frames_per_sample"] = per_sample;
  flags["seed"] = boot_seed;
  manifest.flags = flags;
  return run_with_manifest(manifest, out_dir, with_settings([&](const Settings& s, RunManifest& m) {
    AnalyzeRequest req;
    req.mode = mode;
    req.epsilon = parse_angular_frequency(analyze_eps);
    req.bootstrap = {n_samples, per_sample, boot_seed};
    m.seed = boot_seed;
    const auto report = cmd_analyze(s, analyze_in, req, *out_dir, m);
    if (mode == "line")
      std::printf("line: slope %.4g +- %.2g mrad/MHz (analytic %.4g)\n", report["slope_mrad_per_mhz"].get<double>(),
                  report["slope_error_mrad_per_mhz"].get<double>(), report["analytic_slope_mrad_per_mhz"].get<double>());
    else if (mode == "resolve")
      std::printf("resolve: resolvable=%s\n", report["resolvable"].get<bool>() ? "true" : "false");
    else
      std::printf("%s: %zu rows -> %s\n", mode.c_str(), report["rows"].size(), out_dir->string().c_str());
  }));
}
