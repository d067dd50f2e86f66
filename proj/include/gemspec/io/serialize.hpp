#pragma once

// File formats: angular spectra (CSV, JSON), frame sets (JSON lines) and
// histograms (CSV). Numbers are written in shortest round-trip form.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "gemspec/core/errors.hpp"
#include "gemspec/core/units.hpp"
#include "gemspec/detector/camera.hpp"
#include "gemspec/optics/scan.hpp"

namespace gemspec {

inline constexpr const char* kSpectrumFormat = "gemspec.angular_spectrum/1";
inline constexpr const char* kFramesFormat = "gemspec.frames/1";

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read '{}'", path.string()));
  return in;
}

inline nlohmann::json parse_json(std::istream& in, const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

}  // namespace detail

// --- angular spectrum ------------------------------------------------------

/// Header: detuning_hz, then one column per angle in mrad. Intensity in arbitrary units.
inline void write_spectrum_csv(const AngularSpectrum& s, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "detuning_hz";
  for (double a : s.angles) out << ',' << fmt::format("{}", a / units::mrad);
  out << '\n';
  for (std::size_t j = 0; j < s.rows(); ++j) {
    out << fmt::format("{}", units::ordinary(s.detunings[j]));
    for (double v : s.row(j)) out << ',' << fmt::format("{}", v);
    out << '\n';
  }
}

inline nlohmann::json spectrum_to_json(const AngularSpectrum& s) {
  nlohmann::json spectrum = {{"sigma_omega_rad_s", s.spectrum.sigma_omega},
                             {"two_peak", s.spectrum.two_peak},
                             {"separation_rad_s", s.spectrum.separation}};
  spectrum["relative_phase_rad"] = s.spectrum.relative_phase ? nlohmann::json(*s.spectrum.relative_phase) : nlohmann::json(nullptr);
  return {
      {"format", kSpectrumFormat},
      {"units", {{"detunings", "rad/s"}, {"angles", "rad"}, {"intensity", "arbitrary"}}},
      {"mask", s.mask},
      {"kappa_rad_m", s.kappa},
      {"angular_resolution_rad", s.angular_resolution},
      {"spectrum", spectrum},
      {"detunings", s.detunings},
      {"angles", s.angles},
      {"shape", {s.rows(), s.cols()}},
      {"intensity", s.intensity},
  };
}

inline AngularSpectrum spectrum_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != kSpectrumFormat)
    throw ConfigError(fmt::format("not an angular spectrum document (expected format '{}')", kSpectrumFormat));
  try {
    AngularSpectrum s;
    s.mask = j.at("mask").get<std::string>();
    s.kappa = j.at("kappa_rad_m").get<double>();
    s.angular_resolution = j.at("angular_resolution_rad").get<double>();
    const auto& sp = j.at("spectrum");
    s.spectrum.sigma_omega = sp.at("sigma_omega_rad_s").get<double>();
    s.spectrum.two_peak = sp.at("two_peak").get<bool>();
    s.spectrum.separation = sp.at("separation_rad_s").get<double>();
    if (!sp.at("relative_phase_rad").is_null()) s.spectrum.relative_phase = sp["relative_phase_rad"].get<double>();
    else s.spectrum.relative_phase.reset();
    s.detunings = j.at("detunings").get<std::vector<double>>();
    s.angles = j.at("angles").get<std::vector<double>>();
    s.intensity = j.at("intensity").get<std::vector<double>>();
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2 || shape[0] != s.rows() || shape[1] != s.cols() || s.intensity.size() != s.rows() * s.cols())
      throw ConfigError("angular spectrum shape does not match its axes");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed angular spectrum: {}", e.what()));
  }
}

inline void write_spectrum_json(const AngularSpectrum& s, const std::filesystem::path& path) {
  detail::open_out(path) << spectrum_to_json(s).dump() << '\n';
}

inline AngularSpectrum read_spectrum_json(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return spectrum_from_json(detail::parse_json(in, path));
}

// --- frames ----------------------------------------------------------------

inline nlohmann::json frame_metadata_to_json(const FrameMetadata& m, std::size_t n_frames) {
  nlohmann::json j = {
      {"format", kFramesFormat},
      {"detuning_rad_s", m.detuning},
      {"mask", m.mask},
      {"seed", m.seed},
      {"stream", m.stream},
      {"n_pixels", m.n_pixels},
      {"pixel_pitch_rad", m.pixel_pitch},
      {"mean_signal", m.mean_signal},
      {"mean_background", m.mean_background},
      {"n_frames", n_frames},
  };
  j["epsilon_rad_s"] = m.epsilon ? nlohmann::json(*m.epsilon) : nlohmann::json(nullptr);
  return j;
}

/// First line: metadata object. Then one JSON array of counts per frame.
inline void write_frames_jsonl(const FrameSet& fs, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << frame_metadata_to_json(fs.meta, fs.frames.size()).dump() << '\n';
  std::string line;
  for (const auto& f : fs.frames) {
    line.assign(1, '[');
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i) line += ',';
      line += std::to_string(f[i]);
    }
    line += "]\n";
    out << line;
  }
}

inline FrameSet read_frames_jsonl(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(fmt::format("'{}' is empty", path.string()));
  FrameSet fs;
  std::size_t expected = 0;
  try {
    const auto j = nlohmann::json::parse(line);
    if (j.value("format", std::string{}) != kFramesFormat)
      throw ConfigError(fmt::format("'{}' is not a frame set", path.string()));
    fs.meta.detuning = j.at("detuning_rad_s").get<double>();
    fs.meta.mask = j.at("mask").get<std::string>();
    fs.meta.seed = j.at("seed").get<std::uint64_t>();
    fs.meta.stream = j.at("stream").get<std::uint64_t>();
    fs.meta.n_pixels = j.at("n_pixels").get<std::size_t>();
    fs.meta.pixel_pitch = j.at("pixel_pitch_rad").get<double>();
    fs.meta.mean_signal = j.at("mean_signal").get<double>();
    fs.meta.mean_background = j.at("mean_background").get<double>();
    if (!j.at("epsilon_rad_s").is_null()) fs.meta.epsilon = j["epsilon_rad_s"].get<double>();
    expected = j.at("n_frames").get<std::size_t>();
    fs.frames.reserve(expected);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = nlohmann::json::parse(line).get<std::vector<std::uint32_t>>();
      if (f.size() != fs.meta.n_pixels) throw ConfigError(fmt::format("'{}': frame with wrong pixel count", path.string()));
      fs.frames.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed frame set '{}': {}", path.string(), e.what()));
  }
  if (fs.frames.size() != expected)
    throw ConfigError(fmt::format("'{}' holds {} frames, header says {}", path.string(), fs.frames.size(), expected));
  return fs;
}

/// Columns: pixel, angle_mrad, counts.
inline void write_histogram_csv(const Histogram& h, std::span<const double> angles, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "pixel,angle_mrad,counts\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) out << fmt::format("{},{},{}\n", i, angles[i] / units::mrad, h.counts[i]);
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  detail::open_out(path) << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return detail::parse_json(in, path);
}

}  // namespace gemspec
