#pragma once

// JSON configuration with unit-suffixed quantities.
//
//   {
//     "profile": "paper_defaults",
//     "physics": { "beta": "2pi*1.35 MHz/cm", "cloud_length": "9 mm", ... },
//     "camera":  { "pixel_pitch": "0.27 mrad", "n_pixels": 400, ... },
//     "grid":    { "nx": 1024, "nz": 1024, ... },
//     "mask":    { "blur_sigma": "9.6 um", "flip_every_px": 110 },
//     "scan":    { "span": "1.6 MHz", "steps": 40 }
//   }
//
// Every section and key is optional; missing values come from the profile.
// Unknown keys are rejected.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include <fmt/format.h>
#include <json.hpp>

#include "gemspec/core/errors.hpp"
#include "gemspec/core/physical_config.hpp"
#include "gemspec/core/units.hpp"
#include "gemspec/detector/camera.hpp"
#include "gemspec/optics/far_field.hpp"
#include "gemspec/optics/grid.hpp"

namespace gemspec {

inline constexpr const char* kConfigEnvVar = "GEMSPEC_CONFIG";

struct MaskSettings {
  std::optional<double> blur_sigma;  ///< m; default one SLM pixel, 1 / ppcm
  double contrast = 1.0;
  double flip_every_px = 110.0;  ///< calibration pattern

  double blur_or_default(const PhysicalConfig& cfg) const { return blur_sigma.value_or(1.0 / cfg.slm_pixels_per_length); }
};

struct ScanSettings {
  double span = units::angular(1.6 * units::MHz);  ///< rad/s
  std::size_t steps = 40;
};

struct Settings {
  std::string profile = "paper_defaults";
  PhysicalConfig physics = paper_defaults();
  CameraModel camera;
  GridSettings grid;
  double super_gaussian_order = 4.0;
  FarFieldOptions far_field;
  double max_angle = 0.06;  ///< rad
  MaskSettings mask;
  ScanSettings scan;

  void validate() const {
    physics.validate();
    camera.validate();
    if (!(super_gaussian_order >= 2.0)) throw ConfigError("grid.super_gaussian_order must be >= 2");
    if (far_field.pad < 1) throw ConfigError("grid.pad must be >= 1");
    if (!(max_angle > 0.0)) throw ConfigError("grid.max_angle must be > 0");
    if (mask.blur_sigma && !(*mask.blur_sigma >= 0.0)) throw ConfigError("mask.blur_sigma must be >= 0");
    if (!(mask.contrast > 0.0 && mask.contrast <= 1.0)) throw ConfigError("mask.contrast must lie in (0, 1]");
    if (!(mask.flip_every_px > 0.0)) throw ConfigError("mask.flip_every_px must be > 0");
    if (scan.steps == 0) throw ConfigError("scan.steps must be > 0");
    if (!(scan.span >= 0.0)) throw ConfigError("scan.span must be >= 0");
    Grid2D::make(grid.nx, grid.nz, 1.0, 1.0);  // power-of-two check
    if (!(grid.x_extent_radii >= 4.0) || !(grid.z_extent_lengths >= 1.2))
      throw ConfigError("grid must cover at least 4 R x 1.2 L");
  }
};

namespace detail {

class Section {
 public:
  Section(const nlohmann::json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("config section '{}' must be an object", name_));
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) throw ConfigError(fmt::format("unknown config key '{}.{}'", name_, k));
  }

  void quantity(const char* key, QuantityKind kind, double& out) {
    if (auto v = find(key)) {
      if (!v->is_string())
        throw ConfigError(fmt::format("'{}.{}' must be a string with a unit, expected {}", name_, key, to_string(kind)));
      out = parse_quantity(v->get<std::string>(), kind);
    }
  }
  // Dimensionless values: plain numbers, or strings such as "20 %".
  void fraction(const char* key, double& out) {
    if (auto v = find(key)) {
      if (v->is_number()) out = v->get<double>();
      else if (v->is_string()) out = parse_quantity(v->get<std::string>(), QuantityKind::dimensionless);
      else throw ConfigError(fmt::format("'{}.{}' must be a number", name_, key));
    }
  }
  template <class T>
  void integer(const char* key, T& out) {
    if (auto v = find(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0)
        throw ConfigError(fmt::format("'{}.{}' must be a non-negative integer", name_, key));
      out = static_cast<T>(v->get<long long>());
    }
  }
  const nlohmann::json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

 private:
  const nlohmann::json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline Settings settings_from_json(const nlohmann::json& j) {
  using detail::Section;
  using K = QuantityKind;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  Settings s;
  Section root(j, "config");
  if (auto p = root.find("profile")) {
    if (!p->is_string() || p->get<std::string>() != "paper_defaults")
      throw ConfigError("unknown profile; the bundled profile is \"paper_defaults\"");
  }

  if (auto v = root.find("physics")) {
    Section sec(*v, "physics");
    auto& c = s.physics;
    sec.quantity("beta", K::angular_gradient, c.beta);
    sec.quantity("kappa", K::wavenumber, c.kappa);
    sec.quantity("cloud_length", K::length, c.cloud_length);
    sec.quantity("cloud_radius", K::length, c.cloud_radius);
    bool carrier_given = false;
    if (sec.find("carrier")) carrier_given = true;
    const double old_wavelength = c.wavelength;
    sec.quantity("wavelength", K::length, c.wavelength);
    sec.quantity("carrier", K::angular_rate, c.carrier);
    if (!carrier_given && c.wavelength != old_wavelength) c.carrier = carrier_from_wavelength(c.wavelength);
    sec.fraction("optical_depth", c.optical_depth);
    sec.quantity("coupling_decoherence", K::frequency, c.coupling_decoherence_hz);
    sec.quantity("storage_time", K::time, c.storage_time);
    sec.quantity("lifetime_tau", K::time, c.lifetime_tau);
    sec.quantity("pulse_sigma_t", K::time, c.pulse_sigma_t);
    sec.fraction("eta_thermal", c.eta_thermal);
    sec.fraction("eta_decoherence", c.eta_decoherence);
    sec.fraction("camera_qe", c.camera_qe);
    sec.fraction("filter_transmission", c.filter_transmission);
    if (auto a = sec.find("absorption_efficiency")) {
      if (a->is_null()) {
        c.absorption_efficiency_override.reset();
      } else {
        double eta = 0.0;
        sec.fraction("absorption_efficiency", eta);
        c.absorption_efficiency_override = eta;
      }
    }
    sec.quantity("slm_k_max", K::wavenumber, c.slm_k_max);
    sec.quantity("slm_ppcm", K::pixel_density, c.slm_pixels_per_length);
  }

  if (auto v = root.find("camera")) {
    Section sec(*v, "camera");
    sec.quantity("pixel_pitch", K::angle, s.camera.pixel_pitch);
    sec.integer("n_pixels", s.camera.n_pixels);
    sec.fraction("mean_signal", s.camera.mean_signal);
    sec.fraction("mean_noise", s.camera.mean_noise);
    sec.fraction("mean_dark", s.camera.mean_dark);
    sec.integer("seed", s.camera.seed);
  }

  if (auto v = root.find("grid")) {
    Section sec(*v, "grid");
    sec.integer("nx", s.grid.nx);
    sec.integer("nz", s.grid.nz);
    sec.fraction("x_extent_radii", s.grid.x_extent_radii);
    sec.fraction("z_extent_lengths", s.grid.z_extent_lengths);
    sec.integer("pad", s.far_field.pad);
    sec.fraction("super_gaussian_order", s.super_gaussian_order);
    sec.quantity("max_angle", K::angle, s.max_angle);
  }

  if (auto v = root.find("mask")) {
    Section sec(*v, "mask");
    if (sec.find("blur_sigma")) {
      double sigma = 0.0;
      sec.quantity("blur_sigma", K::length, sigma);
      s.mask.blur_sigma = sigma;
    }
    sec.fraction("contrast", s.mask.contrast);
    sec.fraction("flip_every_px", s.mask.flip_every_px);
  }

  if (auto v = root.find("scan")) {
    Section sec(*v, "scan");
    double span_hz = units::ordinary(s.scan.span);
    sec.quantity("span", K::frequency, span_hz);
    s.scan.span = units::angular(span_hz);
    sec.integer("steps", s.scan.steps);
  }

  s.validate();
  return s;
}

inline Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
  }
  return settings_from_json(j);
}

/// Explicit path first, then $GEMSPEC_CONFIG, then the bundled profile.
inline Settings resolve_settings(const std::optional<std::filesystem::path>& path) {
  if (path) return load_settings(*path);
  if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') return load_settings(env);
  Settings s;
  s.validate();
  return s;
}

/// Snapshot in the same schema, SI units, exact round trip through settings_from_json.
inline nlohmann::json settings_to_json(const Settings& s) {
  const auto& c = s.physics;
  auto q = [](double v, const char* unit) { return fmt::format("{} {}", v, unit); };
  nlohmann::json physics = {
      {"beta", q(c.beta, "rad/s/m")},
      {"kappa", q(c.kappa, "rad/m")},
      {"cloud_length", q(c.cloud_length, "m")},
      {"cloud_radius", q(c.cloud_radius, "m")},
      {"wavelength", q(c.wavelength, "m")},
      {"carrier", q(c.carrier, "rad/s")},
      {"optical_depth", c.optical_depth},
      {"coupling_decoherence", q(c.coupling_decoherence_hz, "Hz")},
      {"storage_time", q(c.storage_time, "s")},
      {"lifetime_tau", q(c.lifetime_tau, "s")},
      {"pulse_sigma_t", q(c.pulse_sigma_t, "s")},
      {"eta_thermal", c.eta_thermal},
      {"eta_decoherence", c.eta_decoherence},
      {"camera_qe", c.camera_qe},
      {"filter_transmission", c.filter_transmission},
      {"absorption_efficiency", c.absorption_efficiency_override ? nlohmann::json(*c.absorption_efficiency_override)
                                                                 : nlohmann::json(nullptr)},
      {"slm_k_max", q(c.slm_k_max, "rad/m")},
      {"slm_ppcm", q(c.slm_pixels_per_length, "px/m")},
  };
  nlohmann::json camera = {
      {"pixel_pitch", q(s.camera.pixel_pitch, "rad")}, {"n_pixels", s.camera.n_pixels},
      {"mean_signal", s.camera.mean_signal},           {"mean_noise", s.camera.mean_noise},
      {"mean_dark", s.camera.mean_dark},               {"seed", s.camera.seed},
  };
  nlohmann::json grid = {
      {"nx", s.grid.nx},
      {"nz", s.grid.nz},
      {"x_extent_radii", s.grid.x_extent_radii},
      {"z_extent_lengths", s.grid.z_extent_lengths},
      {"pad", s.far_field.pad},
      {"super_gaussian_order", s.super_gaussian_order},
      {"max_angle", q(s.max_angle, "rad")},
  };
  nlohmann::json mask = {{"contrast", s.mask.contrast}, {"flip_every_px", s.mask.flip_every_px}};
  if (s.mask.blur_sigma) mask["blur_sigma"] = q(*s.mask.blur_sigma, "m");
  nlohmann::json scan = {{"span", q(units::ordinary(s.scan.span), "Hz")}, {"steps", s.scan.steps}};
  return {{"profile", s.profile}, {"physics", physics}, {"camera", camera}, {"grid", grid}, {"mask", mask}, {"scan", scan}};
}

}  // namespace gemspec
