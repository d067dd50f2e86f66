#pragma once

// Far-field (angular) intensity of the read-out light.

#include <algorithm>
#include <complex>
#include <cstring>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "gemspec/core/errors.hpp"
#include "gemspec/core/physical_config.hpp"
#include "gemspec/optics/coherence.hpp"

namespace gemspec {

/// Forward complex FFT of a fixed length, X[m] = sum_j x[j] e^{-2 pi i j m / n}.
class Fft1d {
 public:
  explicit Fft1d(std::size_t n) : n_(n) {
    buffer_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (buffer_ == nullptr) throw std::bad_alloc();
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  Fft1d(const Fft1d&) = delete;
  Fft1d& operator=(const Fft1d&) = delete;
  ~Fft1d() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(buffer_);
  }

  std::size_t size() const { return n_; }

  /// Transforms `in` zero-padded to size() into `out`.
  void operator()(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
    auto* buf = reinterpret_cast<std::complex<double>*>(buffer_);
    const std::size_t m = std::min(in.size(), n_);
    std::copy_n(in.begin(), m, buf);
    std::fill(buf + m, buf + n_, std::complex<double>{});
    fftw_execute(plan_);
    std::copy_n(buf, n_, out.begin());
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  std::size_t n_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan plan_ = nullptr;
};

struct FarFieldOptions {
  std::size_t pad = 4;  ///< zero-padding factor along x before the transform
};

/// Intensity on a symmetric angle axis theta_m = m dtheta, m = -(N/2 - 1) .. N/2 - 1.
struct AngularIntensity {
  std::vector<double> theta;      ///< rad
  std::vector<double> intensity;  ///< arbitrary units, >= 0
  double dtheta = 0.0;            ///< grid-induced angular resolution, rad

  double total() const {
    double s = 0.0;
    for (double v : intensity) s += v;
    return s;
  }

  /// Restricts to |theta| <= max_angle.
  AngularIntensity cropped(double max_angle) const {
    AngularIntensity out;
    out.dtheta = dtheta;
    for (std::size_t m = 0; m < theta.size(); ++m) {
      if (std::abs(theta[m]) <= max_angle * (1.0 + 1e-12)) {
        out.theta.push_back(theta[m]);
        out.intensity.push_back(intensity[m]);
      }
    }
    return out;
  }

  std::size_t argmax() const {
    return static_cast<std::size_t>(std::max_element(intensity.begin(), intensity.end()) - intensity.begin());
  }
};

namespace detail {

inline std::vector<double> angle_axis(const Grid2D& g, std::size_t n_fft, double k0, double& dtheta) {
  const double dk = kTwoPi / (static_cast<double>(n_fft) * g.dx);
  dtheta = dk / k0;
  const auto half = static_cast<long>(n_fft / 2);
  std::vector<double> theta;
  theta.reserve(n_fft - 1);
  for (long m = -(half - 1); m <= half - 1; ++m) theta.push_back(static_cast<double>(m) * dtheta);
  return theta;
}

// Writes |X[m]|^2 for m = -(N/2 - 1) .. N/2 - 1 (FFT order wrapped).
inline void shifted_power(std::span<const std::complex<double>> spectrum, std::span<double> out) {
  const auto n = static_cast<long>(spectrum.size());
  const long half = n / 2;
  std::size_t k = 0;
  for (long m = -(half - 1); m <= half - 1; ++m) {
    const auto idx = static_cast<std::size_t>((m + n) % n);
    out[k++] = std::norm(spectrum[idx]);
  }
}

}  // namespace detail

/// Read-out intensity I(theta) = |sum_z FFT_x[rho](k_x, z)|^2 at theta = k_x / k0.
///
/// The z-sum is coherent (all slices emit into the same mode), so it is taken
/// before the transform.
inline AngularIntensity far_field(const Coherence& coh, const PhysicalConfig& cfg, const FarFieldOptions& opt = {}) {
  if (coh.stage != CoherenceStage::unwound)
    throw PreconditionError("far field needs the unwound coherence");
  const Grid2D& g = coh.grid();
  std::vector<std::complex<double>> line(g.nx);
  for (std::size_t j = 0; j < g.nz; ++j) {
    auto row = coh.values.row(j);
    for (std::size_t i = 0; i < g.nx; ++i) line[i] += row[i];
  }
  const std::size_t n = opt.pad * g.nx;
  Fft1d fft(n);
  std::vector<std::complex<double>> spectrum(n);
  fft(line, spectrum);

  AngularIntensity out;
  out.theta = detail::angle_axis(g, n, cfg.k0(), out.dtheta);
  out.intensity.resize(out.theta.size());
  detail::shifted_power(spectrum, out.intensity);
  return out;
}

/// Per-slice angular map |FFT_x[rho](k_x, z)|^2, one row per z node.
struct FarFieldMap {
  std::vector<double> theta;
  std::vector<double> z;
  std::vector<double> intensity;  ///< row-major, z.size() x theta.size()
  double dtheta = 0.0;

  double total() const {
    double s = 0.0;
    for (double v : intensity) s += v;
    return s;
  }
};

/// Slice-resolved far field: row z shows where the coherence stored at z
/// emits. Holds for any stage, so the modulated coherence can be inspected directly.
inline FarFieldMap far_field_map(const Coherence& coh, const PhysicalConfig& cfg, const FarFieldOptions& opt = {}) {
  const Grid2D& g = coh.grid();
  const std::size_t n = opt.pad * g.nx;
  Fft1d fft(n);
  FarFieldMap out;
  out.theta = detail::angle_axis(g, n, cfg.k0(), out.dtheta);
  out.z.resize(g.nz);
  out.intensity.resize(g.nz * out.theta.size());
  std::vector<std::complex<double>> spectrum(n);
  for (std::size_t j = 0; j < g.nz; ++j) {
    out.z[j] = g.z(j);
    fft(coh.values.row(j), spectrum);
    detail::shifted_power(spectrum, std::span<double>(out.intensity).subspan(j * out.theta.size(), out.theta.size()));
  }
  return out;
}

}  // namespace gemspec
