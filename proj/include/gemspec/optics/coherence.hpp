#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string_view>

#include <fmt/format.h>

#include "gemspec/core/errors.hpp"
#include "gemspec/core/physical_config.hpp"
#include "gemspec/optics/cloud.hpp"
#include "gemspec/optics/grid.hpp"
#include "gemspec/optics/mask.hpp"

namespace gemspec {

using Complex = std::complex<double>;

/// Spectral amplitude of the input pulse, as a function of the offset from its centre.
///
/// Gaussian: g(d) = exp(-d^2 / 2 sigma^2). Two-peak: g(d - eps/2) + e^{i psi} g(d + eps/2).
/// A two-peak spectrum without a relative phase stands for shot-to-shot random
/// phase; the scan averages its far field over psi.
struct PulseSpectrum {
  double sigma_omega = 0.0;  ///< rad/s
  double separation = 0.0;   ///< epsilon, rad/s; 0 for a single Gaussian
  bool two_peak = false;
  std::optional<double> relative_phase;

  static PulseSpectrum gaussian(double sigma_omega) { return {sigma_omega, 0.0, false, 0.0}; }
  static PulseSpectrum double_gaussian(double sigma_omega, double separation,
                                       std::optional<double> relative_phase = std::nullopt) {
    return {sigma_omega, separation, true, relative_phase};
  }

  Complex amplitude(double offset) const {
    auto g = [this](double d) { return std::exp(-0.5 * d * d / (sigma_omega * sigma_omega)); };
    if (!two_peak) return {g(offset), 0.0};
    const double psi = relative_phase.value_or(0.0);
    return Complex(g(offset - 0.5 * separation), 0.0) + std::polar(g(offset + 0.5 * separation), psi);
  }

  /// Half-width of the spectral support (4 sigma beyond the outer peaks), rad/s.
  double half_support() const { return (two_peak ? 0.5 * separation : 0.0) + 4.0 * sigma_omega; }
};

enum class CoherenceStage { stored, modulated, unwound };

inline std::string_view to_string(CoherenceStage s) {
  switch (s) {
    case CoherenceStage::stored: return "stored";
    case CoherenceStage::modulated: return "modulated";
    case CoherenceStage::unwound: return "unwound";
  }
  return "?";
}

/// How the stored coherence amplitude follows the density: |rho| ~ n^amplitude_exponent.
///
/// The default 1/2 makes the emitted intensity follow the density, so the
/// emitted beam has a 1/e^2 intensity radius R and diffracts into w_theta = lambda / (pi R).
struct StorageModel {
  double amplitude_exponent = 0.5;
};

struct Coherence {
  Field2D<Complex> values;
  CoherenceStage stage = CoherenceStage::stored;
  double detuning = 0.0;           ///< centre of the stored spectrum, rad/s
  double envelope_center_z = 0.0;  ///< z of the spectral envelope centre, m

  const Grid2D& grid() const { return values.grid(); }
};

/// Writes a pulse into the memory: rho(x, z) = n(x, z)^p A(beta z - detuning) e^{i beta z T}.
inline Coherence store_pulse(const PhysicalConfig& cfg, const CloudDensity& cloud, double detuning,
                             const PulseSpectrum& spectrum, const StorageModel& model = {}) {
  const Grid2D& g = cloud.grid;
  if (!(spectrum.sigma_omega > 0.0)) throw PreconditionError("pulse spectral width must be > 0");
  const double lo = (detuning - spectrum.half_support()) / cfg.beta;
  const double hi = (detuning + spectrum.half_support()) / cfg.beta;
  if (lo < g.z_min() || hi > g.z_max()) {
    throw BandwidthError(fmt::format(
        "pulse at detuning 2pi x {:.4g} kHz occupies z in [{:.4g}, {:.4g}] mm, outside the simulated cloud [{:.4g}, {:.4g}] mm",
        units::ordinary(detuning) / units::kHz, lo / units::mm, hi / units::mm, g.z_min() / units::mm,
        g.z_max() / units::mm));
  }

  Coherence c{Field2D<Complex>(g), CoherenceStage::stored, detuning, detuning / cfg.beta};
  const double p = model.amplitude_exponent;
  std::vector<double> transverse(g.nx);
  for (std::size_t i = 0; i < g.nx; ++i) transverse[i] = std::pow(cloud.transverse[i], p);
  for (std::size_t j = 0; j < g.nz; ++j) {
    const double z = g.z(j);
    const Complex longitudinal = std::pow(cloud.longitudinal[j], p) * spectrum.amplitude(cfg.beta * z - detuning) *
                                 std::polar(1.0, cfg.beta * z * cfg.storage_time);
    auto row = c.values.row(j);
    for (std::size_t i = 0; i < g.nx; ++i) row[i] = transverse[i] * longitudinal;
  }
  return c;
}

/// rho_m = rho_i e^{i phi(x, z)}.
inline Coherence modulate(const Coherence& coh, const PhaseMask& mask) {
  if (coh.stage != CoherenceStage::stored)
    throw PreconditionError(fmt::format("modulation needs a stored coherence, got stage '{}'", to_string(coh.stage)));
  if (!(coh.grid() == mask.grid())) throw PreconditionError("coherence and mask grids differ");
  Coherence out = coh;
  auto& v = out.values.data();
  const auto& phi = mask.phase.data();
  for (std::size_t k = 0; k < v.size(); ++k) v[k] *= std::polar(1.0, phi[k]);
  out.stage = CoherenceStage::modulated;
  return out;
}

/// Gradient flip: rho_f = rho_m e^{-i beta z T}, which removes the longitudinal
/// phase accumulated during storage so the envelope centre has k_z = 0.
inline Coherence unwind(const Coherence& coh, const PhysicalConfig& cfg) {
  if (coh.stage != CoherenceStage::modulated)
    throw PreconditionError(fmt::format("unwinding needs a modulated coherence, got stage '{}'", to_string(coh.stage)));
  Coherence out = coh;
  const Grid2D& g = coh.grid();
  for (std::size_t j = 0; j < g.nz; ++j) {
    const Complex phase = std::polar(1.0, -cfg.beta * g.z(j) * cfg.storage_time);
    for (auto& v : out.values.row(j)) v *= phase;
  }
  out.stage = CoherenceStage::unwound;
  return out;
}

inline Coherence modulate_and_unwind(const Coherence& coh, const PhaseMask& mask, const PhysicalConfig& cfg) {
  return unwind(modulate(coh, mask), cfg);
}

}  // namespace gemspec
