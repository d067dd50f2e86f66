#pragma once

// Subcommands with file outputs and a run manifest.
//
// Every run that names an output directory writes manifest.json there, also
// when the run fails. Exit codes: 0 ok, 2 configuration or input error,
// 3 physics precondition violated, 4 analysis failure.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "gemspec/app/pipeline.hpp"
#include "gemspec/core/errors.hpp"
#include "gemspec/io/config.hpp"
#include "gemspec/io/serialize.hpp"

#ifndef GEMSPEC_VERSION
#define GEMSPEC_VERSION "0.1.0"
#endif

namespace gemspec {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitPrecondition = 3, kExitAnalysis = 4 };

inline int exit_code_of(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const PreconditionError*>(&e)) return kExitPrecondition;
  if (dynamic_cast<const AnalysisError*>(&e)) return kExitAnalysis;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitConfig;
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return kExitConfig;
  return kExitAnalysis;
}

inline std::string_view error_kind(int code) {
  switch (code) {
    case kExitConfig: return "config";
    case kExitPrecondition: return "precondition";
    case kExitAnalysis: return "analysis";
    default: return "ok";
  }
}

/// Record of one invocation.
struct RunManifest {
  std::string subcommand;
  nlohmann::json flags = nlohmann::json::object();
  nlohmann::json config;
  std::optional<std::uint64_t> seed;
  std::vector<fs::path> outputs;
  std::vector<std::string> warnings;
  nlohmann::json summary = nlohmann::json::object();

  nlohmann::json to_json(double seconds, std::string_view started, const std::optional<std::string>& error, int code) const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : outputs) out.push_back(p.generic_string());
    nlohmann::json j = {
        {"tool", "gemspec"},
        {"version", GEMSPEC_VERSION},
        {"subcommand", subcommand},
        {"flags", flags},
        {"seed", seed ? nlohmann::json(*seed) : nlohmann::json(nullptr)},
        {"config", config},
        {"outputs", out},
        {"warnings", warnings},
        {"summary", summary},
        {"started_utc", started},
        {"duration_s", seconds},
        {"status", error ? "error" : "ok"},
        {"exit_code", code},
    };
    j["error"] = error ? nlohmann::json{{"kind", error_kind(code)}, {"message", *error}} : nlohmann::json(nullptr);
    return j;
  }
};

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Runs `body(manifest)`, maps exceptions to exit codes and writes
/// <out_dir>/manifest.json when an output directory is given.
template <class Body>
int run_with_manifest(RunManifest& manifest, const std::optional<fs::path>& out_dir, Body&& body) {
  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<std::string> error;
  int code = kExitOk;
  try {
    body(manifest);
  } catch (const std::exception& e) {
    error = e.what();
    code = exit_code_of(e);
    std::fprintf(stderr, "gemspec %s: error: %s\n", manifest.subcommand.c_str(), e.what());
  }
  for (const auto& w : manifest.warnings) std::fprintf(stderr, "gemspec %s: warning: %s\n", manifest.subcommand.c_str(), w.c_str());
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (out_dir) {
    try {
      fs::create_directories(*out_dir);
      write_json(manifest.to_json(seconds, started, error, code), *out_dir / "manifest.json");
    } catch (const std::exception& e) {
      std::fprintf(stderr, "gemspec %s: cannot write manifest: %s\n", manifest.subcommand.c_str(), e.what());
      if (code == kExitOk) code = kExitConfig;
    }
  }
  return code;
}

// --- limits --------------------------------------------------------------

inline nlohmann::json cmd_limits(const Settings& s, const std::optional<fs::path>& out, RunManifest& m) {
  auto report = limits_report(s.physics);
  std::fputs(format_limits(report).c_str(), stdout);
  for (const auto& w : report["warnings"]) m.warnings.push_back(w.get<std::string>());
  if (out) {
    write_json(report, *out / "limits.json");
    m.outputs.push_back("limits.json");
  }
  m.summary = report;
  return report;
}

// --- scan --------------------------------------------------------------------

inline ScanResult cmd_scan(const Settings& s, const ScanRequest& req, const fs::path& out, RunManifest& m) {
  auto result = run_scan(s, req);
  m.warnings.insert(m.warnings.end(), result.warnings.begin(), result.warnings.end());
  write_spectrum_csv(result.spectrum, out / "spectrum.csv");
  write_spectrum_json(result.spectrum, out / "spectrum.json");
  m.outputs.insert(m.outputs.end(), {"spectrum.csv", "spectrum.json"});
  if (result.bands) {
    const auto& b = *result.bands;
    nlohmann::json bands = {{"band_width_m", b.band_width_z},
                            {"band_width_hz", units::ordinary(b.band_width_detuning)},
                            {"origin_m", b.origin_z},
                            {"boundaries_m", b.boundaries_z}};
    nlohmann::json hz = nlohmann::json::array();
    for (double d : b.boundaries_detuning) hz.push_back(units::ordinary(d));
    bands["boundaries_hz"] = hz;
    write_json(bands, out / "bands.json");
    m.outputs.push_back("bands.json");
  }
  m.summary = {{"rows", result.spectrum.rows()},
               {"columns", result.spectrum.cols()},
               {"mask", result.spectrum.mask},
               {"kappa_rad_m", result.physics.kappa}};
  return result;
}

// --- detect ------------------------------------------------------------------

inline constexpr const char* kFramesIndex = "frames_index.json";

inline fs::path find_spectrum(const fs::path& input) {
  if (fs::is_directory(input)) return input / "spectrum.json";
  return input;
}

inline void cmd_detect(const Settings& s, const fs::path& spectrum_path, std::size_t n_frames, const fs::path& out,
                       RunManifest& m) {
  const auto path = find_spectrum(spectrum_path);
  if (!fs::exists(path)) throw ConfigError(fmt::format("spectrum '{}' does not exist; run the scan first", path.string()));
  const auto spectrum = read_spectrum_json(path);
  const auto sets = detect_spectrum(spectrum, s.camera, n_frames);
  const auto angles = s.camera.pixel_angles();

  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t j = 0; j < sets.size(); ++j) {
    const auto frames_name = fmt::format("frames_{:03}.jsonl", j);
    const auto hist_name = fmt::format("histogram_{:03}.csv", j);
    write_frames_jsonl(sets[j], out / frames_name);
    const auto h = histogram(sets[j]);
    write_histogram_csv(h, angles, out / hist_name);
    m.outputs.insert(m.outputs.end(), {frames_name, hist_name});
    rows.push_back({{"detuning_hz", units::ordinary(sets[j].meta.detuning)},
                    {"frames", frames_name},
                    {"histogram", hist_name},
                    {"counts", h.total}});
  }
  nlohmann::json index = {{"format", "gemspec.frames_index/1"},
                          {"spectrum", fs::absolute(path).generic_string()},
                          {"mask", spectrum.mask},
                          {"kappa_rad_m", spectrum.kappa},
                          {"epsilon_rad_s", spectrum.spectrum.two_peak ? nlohmann::json(spectrum.spectrum.separation)
                                                                       : nlohmann::json(nullptr)},
                          {"seed", s.camera.seed},
                          {"n_frames", n_frames},
                          {"rows", rows}};
  write_json(index, out / kFramesIndex);
  m.outputs.push_back(kFramesIndex);
  m.summary = {{"detunings", sets.size()}, {"frames_per_detuning", n_frames}};
}

// --- analyze -----------------------------------------------------------------

struct AnalyzeRequest {
  std::string mode;  ///< fisher | bootstrap | line | resolve
  std::optional<double> epsilon;
  BootstrapOptions bootstrap;
};

struct LoadedFrames {
  std::vector<FrameSet> sets;
  double kappa = 0.0;
};

inline LoadedFrames load_frames_dir(const fs::path& dir) {
  const auto index_path = dir / kFramesIndex;
  if (!fs::exists(index_path)) throw ConfigError(fmt::format("'{}' has no {}; run detect first", dir.string(), kFramesIndex));
  const auto index = read_json(index_path);
  LoadedFrames out;
  try {
    out.kappa = index.at("kappa_rad_m").get<double>();
    for (const auto& row : index.at("rows")) out.sets.push_back(read_frames_jsonl(dir / row.at("frames").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed frame index '{}': {}", index_path.string(), e.what()));
  }
  return out;
}

namespace detail {

inline void write_csv(const fs::path& path, const nlohmann::json& rows, const std::vector<std::string>& columns) {
  auto out = open_out(path);
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << r.at(columns[c]).dump();
    out << '\n';
  }
}

}  // namespace detail

inline nlohmann::json cmd_analyze(const Settings& s, const fs::path& frames_dir, const AnalyzeRequest& req,
                                  const fs::path& out, RunManifest& m) {
  auto loaded = load_frames_dir(frames_dir);
  PhysicalConfig cfg = s.physics;
  if (loaded.kappa > 0.0) cfg.kappa = loaded.kappa;

  nlohmann::json report;
  const std::string base = fmt::format("{}_report", req.mode);
  if (req.mode == "line") {
    report = to_json(analyze_line(loaded.sets, cfg));
    detail::write_csv(out / (base + ".csv"), report["points"], {"detuning_hz", "theta_mrad", "theta_error_mrad", "fitted", "masked"});
  } else if (req.mode == "bootstrap") {
    report = to_json(analyze_bootstrap(loaded.sets, req.bootstrap), req.bootstrap);
    detail::write_csv(out / (base + ".csv"), report["rows"], {"detuning_hz", "mean_theta_mrad", "std_theta_mrad", "photons_per_sample"});
  } else if (req.mode == "fisher") {
    report = to_json(analyze_fisher(loaded.sets, cfg, req.bootstrap));
    detail::write_csv(out / (base + ".csv"), report["rows"],
                      {"detuning_hz", "fisher_per_photon_s2", "photons_total", "cr_std_total_hz", "photons_per_sample",
                       "cr_std_sample_hz", "bootstrap_std_hz", "bootstrap_over_cr"});
  } else if (req.mode == "resolve") {
    report = to_json(analyze_resolve(loaded.sets, req.epsilon));
    detail::write_csv(out / (base + ".csv"), report["rows"],
                      {"detuning_hz", "epsilon_hz", "resolvable", "contrast", "threshold", "fitted_separation_mrad"});
  } else {
    throw ConfigError(fmt::format("unknown --mode '{}'; use fisher, bootstrap, line or resolve", req.mode));
  }
  write_json(report, out / (base + ".json"));
  m.outputs.insert(m.outputs.end(), {base + ".json", base + ".csv"});
  m.summary = {{"mode", req.mode}};
  if (req.mode == "line") {
    m.summary["slope_mrad_per_mhz"] = report["slope_mrad_per_mhz"];
  } else if (req.mode == "resolve") {
    m.summary["resolvable"] = report["resolvable"];
  }
  return report;
}

}  // namespace gemspec
