#pragma once

// Single-photon camera: Poisson photon counting on a 1-D row of pixels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <fmt/format.h>

#include "gemspec/core/errors.hpp"
#include "gemspec/detector/rng.hpp"

namespace gemspec {

struct CameraModel {
  double pixel_pitch = 0.27e-3;  ///< rad per pixel
  std::size_t n_pixels = 400;
  double mean_signal = 2.5;   ///< signal photons per frame, detection efficiency already included
  double mean_noise = 0.1;    ///< background photons per frame, uniform over the sensor
  double mean_dark = 0.0007;  ///< dark counts per frame, uniform over the sensor
  std::uint64_t seed = 1;

  void validate() const {
    if (!(pixel_pitch > 0.0)) throw ConfigError("pixel_pitch must be > 0");
    if (n_pixels == 0) throw ConfigError("camera needs at least one pixel");
    if (!(mean_signal >= 0.0 && mean_noise >= 0.0 && mean_dark >= 0.0))
      throw ConfigError("photon rates must be >= 0");
  }

  /// Angle of the centre of pixel i; the sensor is centred on theta = 0.
  double pixel_center(std::size_t i) const {
    return (static_cast<double>(i) - 0.5 * static_cast<double>(n_pixels - 1)) * pixel_pitch;
  }
  double sensor_min() const { return -0.5 * static_cast<double>(n_pixels) * pixel_pitch; }
  double sensor_max() const { return 0.5 * static_cast<double>(n_pixels) * pixel_pitch; }

  std::optional<std::size_t> pixel_of(double theta) const {
    const double f = (theta - sensor_min()) / pixel_pitch;
    if (f < 0.0 || f >= static_cast<double>(n_pixels)) return std::nullopt;
    return std::min(static_cast<std::size_t>(f), n_pixels - 1);
  }

  std::vector<double> pixel_angles() const {
    std::vector<double> a(n_pixels);
    for (std::size_t i = 0; i < n_pixels; ++i) a[i] = pixel_center(i);
    return a;
  }
};

/// Angle per pixel from a reference grating: (k / k0) / offset.
inline double calibrate_pixels(double grating_k, double measured_px_offset, double k0) {
  if (!(measured_px_offset > 0.0)) throw PreconditionError("pixel offset of the grating order must be > 0");
  return (grating_k / k0) / measured_px_offset;
}

struct FrameMetadata {
  double detuning = 0.0;  ///< rad/s
  std::string mask;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::size_t n_pixels = 0;
  double pixel_pitch = 0.0;
  double mean_signal = 0.0;
  double mean_background = 0.0;
  std::optional<double> epsilon;  ///< two-peak separation of the input, rad/s
};

struct FrameSet {
  FrameMetadata meta;
  std::vector<std::vector<std::uint32_t>> frames;  ///< one count vector per frame
};

/// Sampling distribution of signal photons over the sensor, built from an
/// intensity given on bins of width dtheta centred at theta.
class AngleSampler {
 public:
  AngleSampler(std::span<const double> theta, std::span<const double> intensity, double dtheta, double lo, double hi) {
    if (theta.size() != intensity.size()) throw PreconditionError("angle and intensity axes differ in length");
    cdf_.reserve(theta.size());
    double running = 0.0;
    for (std::size_t m = 0; m < theta.size(); ++m) {
      const double a = std::max(theta[m] - 0.5 * dtheta, lo);
      const double b = std::min(theta[m] + 0.5 * dtheta, hi);
      if (b <= a || !(intensity[m] > 0.0)) continue;
      running += intensity[m] * (b - a) / dtheta;
      cdf_.push_back(running);
      lo_.push_back(a);
      hi_.push_back(b);
    }
    total_ = running;
  }

  double total() const { return total_; }

  template <class Rng>
  double operator()(Rng& rng) const {
    boost::random::uniform_01<double> u;
    const double target = u(rng) * total_;
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    const auto k = std::min(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    return lo_[k] + u(rng) * (hi_[k] - lo_[k]);
  }

 private:
  std::vector<double> cdf_, lo_, hi_;
  double total_ = 0.0;
};

/// Monte-Carlo frames for one detuning.
///
/// Each frame draws Poisson(mean_signal) photons from the normalised intensity
/// restricted to the sensor and Poisson(mean_noise + mean_dark) photons
/// uniformly over the pixels. Frame f uses substream (cam.seed, stream, f), so
/// the result is a pure function of the inputs.
inline FrameSet sample_frames(std::span<const double> theta, std::span<const double> intensity, double dtheta,
                              const CameraModel& cam, std::size_t n_frames, std::uint64_t stream = 0) {
  cam.validate();
  if (n_frames == 0) throw PreconditionError("n_frames must be > 0");
  AngleSampler sampler(theta, intensity, dtheta, cam.sensor_min(), cam.sensor_max());
  if (cam.mean_signal > 0.0 && !(sampler.total() > 0.0))
    throw PreconditionError("degenerate intensity: no signal falls on the sensor but the signal rate is non-zero");

  FrameSet out;
  out.meta.seed = cam.seed;
  out.meta.stream = stream;
  out.meta.n_pixels = cam.n_pixels;
  out.meta.pixel_pitch = cam.pixel_pitch;
  out.meta.mean_signal = cam.mean_signal;
  out.meta.mean_background = cam.mean_noise + cam.mean_dark;
  out.frames.assign(n_frames, std::vector<std::uint32_t>(cam.n_pixels, 0));

  const double background = cam.mean_noise + cam.mean_dark;
  boost::random::uniform_int_distribution<std::size_t> uniform_pixel(0, cam.n_pixels - 1);
  for (std::size_t f = 0; f < n_frames; ++f) {
    auto rng = substream(cam.seed, stream, f);
    auto& frame = out.frames[f];
    if (cam.mean_signal > 0.0) {
      boost::random::poisson_distribution<int, double> poisson(cam.mean_signal);
      const int n = poisson(rng);
      for (int p = 0; p < n; ++p)
        if (auto px = cam.pixel_of(sampler(rng))) ++frame[*px];
    }
    if (background > 0.0) {
      boost::random::poisson_distribution<int, double> poisson(background);
      const int n = poisson(rng);
      for (int p = 0; p < n; ++p) ++frame[uniform_pixel(rng)];
    }
  }
  return out;
}

struct Histogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
};

inline Histogram histogram(const FrameSet& frames) {
  if (frames.frames.empty()) throw PreconditionError("histogram of an empty frame set");
  Histogram h;
  h.counts.assign(frames.frames.front().size(), 0);
  for (const auto& f : frames.frames) {
    if (f.size() != h.counts.size()) throw PreconditionError("frames differ in pixel count");
    for (std::size_t i = 0; i < f.size(); ++i) h.counts[i] += f[i];
  }
  for (auto c : h.counts) h.total += c;
  return h;
}

/// Mean counts per pixel over the selected frames.
inline std::vector<double> average_frames(const FrameSet& frames, std::span<const std::size_t> indices) {
  if (indices.empty()) throw PreconditionError("averaging zero frames");
  std::vector<double> mean(frames.meta.n_pixels ? frames.meta.n_pixels : frames.frames.front().size(), 0.0);
  for (auto idx : indices) {
    const auto& f = frames.frames.at(idx);
    for (std::size_t i = 0; i < f.size(); ++i) mean[i] += f[i];
  }
  for (auto& v : mean) v /= static_cast<double>(indices.size());
  return mean;
}

}  // namespace gemspec
