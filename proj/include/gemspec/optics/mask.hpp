#pragma once

// Phase masks imprinted on the stored coherence by the ac-Stark beam.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "gemspec/core/errors.hpp"
#include "gemspec/core/formulas.hpp"
#include "gemspec/core/physical_config.hpp"
#include "gemspec/optics/grid.hpp"

namespace gemspec {

enum class MaskProvenance { ideal, wrapped, blurred, wrapped_blurred, sign_flipped, grating, zero, external_image };

inline std::string_view to_string(MaskProvenance p) {
  switch (p) {
    case MaskProvenance::ideal: return "ideal";
    case MaskProvenance::wrapped: return "wrapped";
    case MaskProvenance::blurred: return "blurred";
    case MaskProvenance::wrapped_blurred: return "wrapped+blurred";
    case MaskProvenance::sign_flipped: return "sign-flipped";
    case MaskProvenance::grating: return "grating";
    case MaskProvenance::zero: return "zero";
    case MaskProvenance::external_image: return "external-image";
  }
  return "?";
}

/// Band layout of the gradient-calibration pattern.
struct CalibrationBands {
  double band_width_z = 0.0;        ///< m
  double band_width_detuning = 0.0;  ///< beta * band_width_z, rad/s
  double origin_z = 0.0;            ///< z of one band edge, m
  std::vector<double> boundaries_z;          ///< band edges inside the grid, m
  std::vector<double> boundaries_detuning;   ///< same edges as detunings, rad/s
};

struct PhaseMask {
  Field2D<double> phase;  ///< rad
  MaskProvenance provenance = MaskProvenance::ideal;
  std::vector<std::string> warnings;
  std::optional<CalibrationBands> bands;

  const Grid2D& grid() const { return phase.grid(); }
};

inline PhaseMask zero_mask(const Grid2D& grid) { return PhaseMask{Field2D<double>(grid), MaskProvenance::zero, {}, {}}; }

/// Constant transverse grating phi = k x.
inline PhaseMask grating_mask(const Grid2D& grid, double k) {
  PhaseMask m{Field2D<double>(grid), MaskProvenance::grating, {}, {}};
  for (std::size_t j = 0; j < grid.nz; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) m.phase(i, j) = k * grid.x(i);
  return m;
}

/// Prism-like phase phi(x, z) = kappa x z / L.
///
/// The steepest local grating, kappa/2 at the cloud ends, is compared with the
/// SLM limit; exceeding it is physical rather than mathematical, so the mask is
/// still returned with a warning attached.
inline PhaseMask ideal_prism_mask(const PhysicalConfig& cfg, const Grid2D& grid) {
  PhaseMask m{Field2D<double>(grid), MaskProvenance::ideal, {}, {}};
  const double slope = cfg.kappa / cfg.cloud_length;
  for (std::size_t j = 0; j < grid.nz; ++j) {
    const double zj = grid.z(j);
    for (std::size_t i = 0; i < grid.nx; ++i) m.phase(i, j) = slope * grid.x(i) * zj;
  }
  if (0.5 * cfg.kappa > cfg.slm_k_max) {
    m.warnings.push_back(fmt::format("local grating kappa/2 = 2pi x {:.3g} mm^-1 exceeds the SLM limit 2pi x {:.3g} mm^-1",
                                     cfg.kappa / 2 / kTwoPi * units::mm, cfg.slm_k_max / kTwoPi * units::mm));
  }
  return m;
}

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma_cells) {
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma_cells));
  std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
  double sum = 0.0;
  for (std::ptrdiff_t t = -half; t <= half; ++t) {
    const double v = std::exp(-0.5 * static_cast<double>(t * t) / (sigma_cells * sigma_cells));
    k[static_cast<std::size_t>(t + half)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

// 1-D convolution of a strided line with clamped (nearest) boundaries.
inline void convolve_line(double* data, std::size_t n, std::size_t stride, const std::vector<double>& kernel,
                          std::vector<double>& scratch) {
  const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  scratch.resize(n);
  for (std::ptrdiff_t i = 0; i <= last; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t t = -half; t <= half; ++t) {
      const std::ptrdiff_t src = std::clamp(i + t, std::ptrdiff_t{0}, last);
      acc += kernel[static_cast<std::size_t>(t + half)] * data[static_cast<std::size_t>(src) * stride];
    }
    scratch[static_cast<std::size_t>(i)] = acc;
  }
  for (std::size_t i = 0; i < n; ++i) data[i * stride] = scratch[i];
}

inline void gaussian_blur(Field2D<double>& f, double sigma) {
  const auto& g = f.grid();
  std::vector<double> scratch;
  if (sigma / g.dx > 1e-3) {
    const auto kernel = gaussian_kernel(sigma / g.dx);
    for (std::size_t j = 0; j < g.nz; ++j) convolve_line(f.row(j).data(), g.nx, 1, kernel, scratch);
  }
  if (sigma / g.dz > 1e-3) {
    const auto kernel = gaussian_kernel(sigma / g.dz);
    for (std::size_t i = 0; i < g.nx; ++i) convolve_line(&f(i, 0), g.nz, g.nx, kernel, scratch);
  }
}

inline double wrap_phase(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

}  // namespace detail

/// Imaging model of the SLM projection.
///
/// With wrapping, the projected intensity is the sawtooth (phi mod 2pi) / 2pi in
/// units of I_2pi. The intensity is Gaussian-blurred with blur_sigma, scaled by
/// contrast, and read back as phase 2pi I. Without wrapping the phase itself is
/// blurred. No wrapping and no blur returns the input unchanged.
inline PhaseMask wrap_and_blur_mask(const PhaseMask& mask, double blur_sigma, bool wrap, double contrast = 1.0) {
  if (!(blur_sigma >= 0.0)) throw PreconditionError("blur_sigma must be >= 0");
  if (!(contrast > 0.0 && contrast <= 1.0)) throw PreconditionError("contrast must lie in (0, 1]");
  if (!wrap && blur_sigma == 0.0 && contrast == 1.0) return mask;

  PhaseMask out = mask;
  auto& values = out.phase.data();
  if (wrap)
    for (auto& v : values) v = detail::wrap_phase(v);
  if (blur_sigma > 0.0) detail::gaussian_blur(out.phase, blur_sigma);
  if (contrast != 1.0)
    for (auto& v : values) v *= contrast;

  if (wrap && blur_sigma > 0.0) out.provenance = MaskProvenance::wrapped_blurred;
  else if (wrap) out.provenance = MaskProvenance::wrapped;
  else out.provenance = MaskProvenance::blurred;
  return out;
}

/// Prism pattern whose sign flips every flip_every_px SLM pixels along z.
///
/// Bands have width flip_every_px / ppcm. By default the band boundaries sit at
/// +-w/2, +-3w/2, ..., so the central band spans z = 0; band_origin_z moves the
/// edge lattice. A non-finite flip_every_px gives the plain prism.
inline PhaseMask gradient_calibration_mask(const PhysicalConfig& cfg, const Grid2D& grid, double flip_every_px,
                                           double pixels_per_length,
                                           std::optional<double> band_origin_z = std::nullopt) {
  if (!(flip_every_px > 0.0)) throw PreconditionError("flip_every must be > 0");
  if (!(pixels_per_length > 0.0)) throw PreconditionError("ppcm must be > 0");
  PhaseMask m = ideal_prism_mask(cfg, grid);
  if (!std::isfinite(flip_every_px)) return m;

  const double width = flip_every_px / pixels_per_length;
  const double origin = band_origin_z.value_or(-0.5 * width);
  CalibrationBands bands;
  bands.band_width_z = width;
  bands.band_width_detuning = cfg.beta * width;
  bands.origin_z = origin;
  const auto first = static_cast<long>(std::ceil((grid.z_min() - origin) / width));
  const auto last = static_cast<long>(std::floor((grid.z_max() - origin) / width));
  for (long b = first; b <= last; ++b) {
    const double edge = origin + static_cast<double>(b) * width;
    bands.boundaries_z.push_back(edge);
    bands.boundaries_detuning.push_back(cfg.beta * edge);
  }

  for (std::size_t j = 0; j < grid.nz; ++j) {
    const auto band = static_cast<long>(std::floor((grid.z(j) - origin) / width));
    if (band % 2 != 0)
      for (std::size_t i = 0; i < grid.nx; ++i) m.phase(i, j) = -m.phase(i, j);
  }
  m.provenance = MaskProvenance::sign_flipped;
  m.bands = std::move(bands);
  return m;
}

}  // namespace gemspec
