#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "gemspec/core/errors.hpp"
#include "gemspec/core/units.hpp"

namespace gemspec {

/// Experiment constants. SI units, angular frequencies in rad/s, with the
/// exception of the coupling decoherence rate, which the efficiency formula
/// consumes as an ordinary frequency.
struct PhysicalConfig {
  double beta = 0.0;              ///< magnetic gradient, rad s^-1 m^-1
  double kappa = 0.0;             ///< prism mask wavevector scale, rad/m
  double cloud_length = 0.0;      ///< L, 1/e^2 longitudinal extent, m
  double cloud_radius = 0.0;      ///< R, 1/e^2 transverse radius of the density, m
  double wavelength = 0.0;        ///< m
  double carrier = 0.0;           ///< omega_0, rad/s
  double optical_depth = 0.0;
  double coupling_decoherence_hz = 0.0;  ///< Gamma, Hz
  double storage_time = 0.0;      ///< T, s
  double lifetime_tau = 0.0;      ///< s
  double pulse_sigma_t = 0.0;     ///< s
  double eta_thermal = 1.0;
  double eta_decoherence = 1.0;
  double camera_qe = 1.0;
  double filter_transmission = 1.0;
  /// Quoted absorption efficiency; when set it replaces the formula value in the efficiency chain.
  std::optional<double> absorption_efficiency_override;
  double slm_k_max = 0.0;              ///< largest wavevector the SLM imaging resolves, rad/m
  double slm_pixels_per_length = 0.0;  ///< ppcm, SLM pixels per metre of cloud

  double k0() const { return kTwoPi / wavelength; }
  /// Gaussian envelope: sigma_omega = 1 / sigma_t.
  double pulse_sigma_omega() const { return 1.0 / pulse_sigma_t; }
  /// Memory bandwidth B = beta L, rad/s.
  double bandwidth() const { return beta * cloud_length; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be > 0");
    };
    auto fraction = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
    };
    positive(beta, "beta");
    positive(kappa, "kappa");
    positive(cloud_length, "cloud_length");
    positive(cloud_radius, "cloud_radius");
    positive(wavelength, "wavelength");
    positive(carrier, "carrier");
    positive(storage_time, "storage_time");
    positive(lifetime_tau, "lifetime_tau");
    positive(pulse_sigma_t, "pulse_sigma_t");
    positive(slm_k_max, "slm_k_max");
    positive(slm_pixels_per_length, "slm_pixels_per_length");
    if (!(optical_depth >= 0.0)) throw ConfigError("optical_depth must be >= 0");
    if (!(coupling_decoherence_hz >= 0.0)) throw ConfigError("coupling_decoherence must be >= 0");
    fraction(eta_thermal, "eta_thermal");
    fraction(eta_decoherence, "eta_decoherence");
    fraction(camera_qe, "camera_qe");
    fraction(filter_transmission, "filter_transmission");
    if (absorption_efficiency_override) fraction(*absorption_efficiency_override, "absorption_efficiency");
  }
};

/// Carrier frequency of light with the given vacuum wavelength, rad/s.
inline double carrier_from_wavelength(double wavelength) { return kTwoPi * kSpeedOfLight / wavelength; }

/// Constants of the reference rubidium GEM setup.
///
/// The storage time is not quoted for the experiment; it only enters through the
/// longitudinal phase that the gradient flip removes again, so any positive value works.
inline PhysicalConfig paper_defaults() {
  using namespace units;
  PhysicalConfig c;
  c.beta = angular(1.35 * MHz) / cm;
  c.kappa = kTwoPi * 20.0 / mm;
  c.cloud_length = 9.0 * mm;
  c.cloud_radius = 208.0 * um;
  c.wavelength = 795.0 * nm;
  c.carrier = carrier_from_wavelength(c.wavelength);
  c.optical_depth = 60.0;
  c.coupling_decoherence_hz = 9.1 * kHz;
  c.storage_time = 20.0 * us;
  c.lifetime_tau = 100.0 * us;
  c.pulse_sigma_t = 5.64 * us;
  c.eta_thermal = 0.60;
  c.eta_decoherence = 0.75;
  c.camera_qe = 0.20;
  c.filter_transmission = 0.60;
  c.absorption_efficiency_override = 0.365;
  c.slm_k_max = kTwoPi * 12.0 / mm;
  c.slm_pixels_per_length = 104.0 / mm;
  return c;
}

}  // namespace gemspec
