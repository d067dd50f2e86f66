#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "gemspec/core/errors.hpp"
#include "gemspec/core/physical_config.hpp"
#include "gemspec/optics/cloud.hpp"
#include "gemspec/optics/coherence.hpp"
#include "gemspec/optics/far_field.hpp"
#include "gemspec/optics/mask.hpp"

namespace gemspec {

/// Far-field intensity per input detuning, I(omega_j, theta_m).
struct AngularSpectrum {
  std::vector<double> detunings;  ///< rad/s
  std::vector<double> angles;     ///< rad, symmetric about 0
  std::vector<double> intensity;  ///< row-major detunings x angles
  double angular_resolution = 0.0;

  std::string mask;            ///< provenance of the mask used
  PulseSpectrum spectrum;      ///< input pulse shape (centre = row detuning)
  double kappa = 0.0;

  std::size_t rows() const { return detunings.size(); }
  std::size_t cols() const { return angles.size(); }
  std::span<const double> row(std::size_t j) const { return {intensity.data() + j * cols(), cols()}; }
  std::span<double> row(std::size_t j) { return {intensity.data() + j * cols(), cols()}; }
};

struct ScanOptions {
  FarFieldOptions far_field;
  StorageModel storage;
  double max_angle = 0.06;  ///< rad, crop of the stored angle axis
};

/// `steps` detunings with spacing span / steps, centred on 0 (span 1.6 MHz, 40
/// steps gives the 40 kHz grid -780 .. +780 kHz). One step gives {0}.
inline std::vector<double> scan_detunings(double span, std::size_t steps) {
  if (steps == 0) throw PreconditionError("a scan needs at least one step");
  if (!(span >= 0.0)) throw PreconditionError("scan span must be >= 0");
  std::vector<double> out(steps);
  const double step = span / static_cast<double>(steps);
  for (std::size_t j = 0; j < steps; ++j) out[j] = -0.5 * span + (static_cast<double>(j) + 0.5) * step;
  return out;
}

/// Grid large enough to hold every pulse of the scan.
inline Grid2D make_scan_grid(const PhysicalConfig& cfg, const GridSettings& settings,
                             std::span<const double> detunings, const PulseSpectrum& spectrum) {
  double reach = 0.0;
  for (double d : detunings) reach = std::max(reach, std::abs(d) + spectrum.half_support());
  // z_max sits one cell short of the nominal half extent
  const double needed = reach / cfg.beta;
  Grid2D g = make_grid(cfg, settings, needed);
  if (g.z_max() < needed) g = make_grid(cfg, settings, needed + 2.0 * g.dz);
  return g;
}

inline AngularIntensity pulse_far_field(const PhysicalConfig& cfg, const CloudDensity& cloud, const PhaseMask& mask,
                                        double detuning, const PulseSpectrum& spectrum, const ScanOptions& opt = {}) {
  auto run = [&](const PulseSpectrum& s) {
    const auto stored = store_pulse(cfg, cloud, detuning, s, opt.storage);
    return far_field(modulate_and_unwind(stored, mask, cfg), cfg, opt.far_field);
  };
  if (spectrum.two_peak && !spectrum.relative_phase) {
    // Mean over a uniformly random relative phase: the psi = 0 and psi = pi
    // intensities average to |a|^2 + |b|^2 exactly.
    auto in_phase = run(PulseSpectrum::double_gaussian(spectrum.sigma_omega, spectrum.separation, 0.0));
    const auto opposite = run(PulseSpectrum::double_gaussian(spectrum.sigma_omega, spectrum.separation, kPi));
    for (std::size_t m = 0; m < in_phase.intensity.size(); ++m)
      in_phase.intensity[m] = 0.5 * (in_phase.intensity[m] + opposite.intensity[m]);
    return in_phase;
  }
  return run(spectrum);
}

/// One far-field row per detuning. Rows are independent and deterministic.
inline AngularSpectrum frequency_scan(const PhysicalConfig& cfg, const CloudDensity& cloud, const PhaseMask& mask,
                                      std::span<const double> detunings, const PulseSpectrum& spectrum,
                                      const ScanOptions& opt = {}) {
  if (detunings.empty()) throw PreconditionError("frequency scan needs at least one detuning");
  AngularSpectrum out;
  out.detunings.assign(detunings.begin(), detunings.end());
  out.mask = std::string(to_string(mask.provenance));
  out.spectrum = spectrum;
  out.kappa = cfg.kappa;
  for (std::size_t j = 0; j < detunings.size(); ++j) {
    const auto row = pulse_far_field(cfg, cloud, mask, detunings[j], spectrum, opt).cropped(opt.max_angle);
    if (j == 0) {
      out.angles = row.theta;
      out.angular_resolution = row.dtheta;
      out.intensity.reserve(detunings.size() * row.theta.size());
    }
    out.intensity.insert(out.intensity.end(), row.intensity.begin(), row.intensity.end());
  }
  return out;
}

}  // namespace gemspec
