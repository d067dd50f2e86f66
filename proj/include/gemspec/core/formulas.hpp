#pragma once

// Closed-form relations of the spectrum-to-position converter: frequency to
// storage position, emission angle, storage efficiency and resolution limits.

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "gemspec/core/errors.hpp"
#include "gemspec/core/physical_config.hpp"

namespace gemspec {

/// Angular separation, in units of the beam waist, at which two equal Gaussian
/// peaks count as resolved (generalized Rayleigh criterion).
inline constexpr double kRayleighFactor = 1.33;

inline void require_in_band(double detuning, const PhysicalConfig& cfg) {
  const double half = 0.5 * cfg.bandwidth();
  if (std::abs(detuning) > half * (1.0 + 1e-12)) {
    throw BandwidthError(fmt::format(
        "detuning 2pi x {:.4g} kHz exceeds the memory bandwidth limit |omega - omega0| <= beta L / 2 = 2pi x {:.4g} kHz",
        units::ordinary(detuning) / units::kHz, units::ordinary(half) / units::kHz));
  }
}

/// Storage position of a detuning (omega - omega0); no bandwidth check.
inline double position_of_detuning(double detuning, const PhysicalConfig& cfg) { return detuning / cfg.beta; }

/// Resonance condition omega = beta z + omega0, solved for z.
inline double gem_frequency_to_position(double omega, const PhysicalConfig& cfg) {
  const double detuning = omega - cfg.carrier;
  require_in_band(detuning, cfg);
  return position_of_detuning(detuning, cfg);
}

inline double position_to_frequency(double z, const PhysicalConfig& cfg) { return cfg.carrier + cfg.beta * z; }

/// Transverse wavevector written at the storage position of omega by the prism mask.
inline double kx_of_omega(double omega, const PhysicalConfig& cfg) {
  return (omega - cfg.carrier) * cfg.kappa / (cfg.beta * cfg.cloud_length);
}

/// d(theta)/d(omega) = kappa / (L beta k0), rad per rad/s.
inline double angular_dispersion(const PhysicalConfig& cfg) {
  return cfg.kappa / (cfg.cloud_length * cfg.beta * cfg.k0());
}

/// Same slope expressed in mrad per MHz of ordinary frequency.
inline double angular_dispersion_mrad_per_mhz(const PhysicalConfig& cfg) {
  return angular_dispersion(cfg) * kTwoPi * units::MHz / units::mrad;
}

inline double emission_angle_of_detuning(double detuning, const PhysicalConfig& cfg) {
  return angular_dispersion(cfg) * detuning;
}

/// Emission angle theta(omega) = k_x(omega) / k0.
inline double emission_angle(double omega, const PhysicalConfig& cfg) {
  require_in_band(omega - cfg.carrier, cfg);
  return kx_of_omega(omega, cfg) / cfg.k0();
}

/// Deflection angle of a transverse wavevector.
inline double angle_of_wavevector(double kx, const PhysicalConfig& cfg) { return kx / cfg.k0(); }

/// GEM absorption efficiency 1 - exp(-2 pi OD Gamma / B) with Gamma and B both
/// taken as ordinary frequencies.
inline double absorption_efficiency(const PhysicalConfig& cfg) {
  const double bandwidth_hz = units::ordinary(cfg.bandwidth());
  if (!(bandwidth_hz > 0.0)) throw PreconditionError("absorption efficiency needs a positive memory bandwidth");
  if (cfg.optical_depth < 0.0 || cfg.coupling_decoherence_hz < 0.0)
    throw PreconditionError("optical depth and decoherence rate must be non-negative");
  return -std::expm1(-kTwoPi * cfg.optical_depth * cfg.coupling_decoherence_hz / bandwidth_hz);
}

struct EfficiencyStage {
  std::string name;
  double factor = 1.0;
};

struct EfficiencyBreakdown {
  double eta_absorption = 0.0;          ///< value used in the chain
  double eta_absorption_formula = 0.0;  ///< 1 - exp(-2 pi OD Gamma / B)
  double eta_memory = 0.0;              ///< eta^2 eta_th eta_d
  double eta_total = 0.0;               ///< memory x camera QE x filter
  std::vector<EfficiencyStage> stages;  ///< in order along the chain
  std::vector<std::string> warnings;

  /// Running product along the chain; non-increasing since every factor is in [0, 1].
  std::vector<double> cumulative() const {
    std::vector<double> out;
    double running = 1.0;
    for (const auto& s : stages) out.push_back(running *= s.factor);
    return out;
  }
};

inline EfficiencyBreakdown efficiency_chain(const PhysicalConfig& cfg) {
  EfficiencyBreakdown out;
  out.eta_absorption_formula = absorption_efficiency(cfg);
  out.eta_absorption = out.eta_absorption_formula;
  if (cfg.absorption_efficiency_override) {
    out.eta_absorption = *cfg.absorption_efficiency_override;
    if (std::abs(out.eta_absorption - out.eta_absorption_formula) > 1e-3) {
      out.warnings.push_back(fmt::format(
          "absorption efficiency override {:.4f} differs from the formula value {:.4f}; using the override",
          out.eta_absorption, out.eta_absorption_formula));
    }
  }
  out.stages = {
      {"write-in absorption", out.eta_absorption},
      {"read-out", out.eta_absorption},
      {"thermal decoherence", cfg.eta_thermal},
      {"coupling decoherence", cfg.eta_decoherence},
      {"camera quantum efficiency", cfg.camera_qe},
      {"filter transmission", cfg.filter_transmission},
  };
  for (const auto& s : out.stages) {
    if (!(s.factor >= 0.0 && s.factor <= 1.0))
      throw ConfigError(fmt::format("efficiency factor '{}' = {} is outside [0, 1]", s.name, s.factor));
  }
  out.eta_memory = out.eta_absorption * out.eta_absorption * cfg.eta_thermal * cfg.eta_decoherence;
  out.eta_total = out.eta_memory * cfg.camera_qe * cfg.filter_transmission;
  return out;
}

struct ResolutionLimits {
  double w_theta = 0.0;          ///< diffraction-limited angular waist, rad
  double w_omega = 0.0;          ///< the same waist mapped to frequency, rad/s
  double delta_omega = 0.0;      ///< smallest resolvable separation, rad/s
  double resolving_power = 0.0;  ///< omega0 / delta_omega
  double k_max = 0.0;            ///< grating wavevector whose fringe Rayleigh range equals R, rad/m
};

inline ResolutionLimits resolution_limits(const PhysicalConfig& cfg) {
  if (!(cfg.cloud_radius > 0 && cfg.cloud_length > 0 && cfg.kappa > 0 && cfg.beta > 0))
    throw PreconditionError("resolution limits need positive R, L, kappa and beta");
  ResolutionLimits r;
  r.w_theta = cfg.wavelength / (kPi * cfg.cloud_radius);
  r.w_omega = r.w_theta * cfg.cloud_length * cfg.k0() * cfg.beta / cfg.kappa;
  r.delta_omega = kRayleighFactor * r.w_omega;
  r.resolving_power = cfg.carrier / r.delta_omega;
  r.k_max = kTwoPi * std::sqrt(kPi / (cfg.wavelength * cfg.cloud_radius));
  return r;
}

/// Largest deflection the SLM can imprint, slm_k_max / k0.
inline double max_deflection_angle(const PhysicalConfig& cfg) { return cfg.slm_k_max / cfg.k0(); }

}  // namespace gemspec
