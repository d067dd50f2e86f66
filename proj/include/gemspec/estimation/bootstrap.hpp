#pragma once

// Bootstrap spread of the fitted peak position.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <boost/random/uniform_int_distribution.hpp>

#include "gemspec/core/errors.hpp"
#include "gemspec/detector/camera.hpp"
#include "gemspec/detector/rng.hpp"
#include "gemspec/estimation/fit.hpp"

namespace gemspec {

struct BootstrapOptions {
  std::size_t n_samples = 100;
  std::size_t frames_per_sample = 500;
  std::uint64_t seed = 1;
};

struct BootstrapResult {
  GaussianFit pooled;           ///< free fit to the mean of all frames
  std::vector<double> centers;  ///< rad, one per resample
  double mean = 0.0;
  double variance = 0.0;        ///< unbiased
  double std_dev = 0.0;
  double photons_per_sample = 0.0;  ///< mean detected counts in one resample
};

/// Resamples frames with replacement, averages each resample and fits only the
/// centre of a Gaussian whose width, height and offset are fixed to the fit of
/// the pooled average.
inline BootstrapResult bootstrap_position(const FrameSet& frames, std::span<const double> angles,
                                          const BootstrapOptions& opt = {}) {
  if (frames.frames.empty()) throw AnalysisError("bootstrap of an empty frame set");
  if (opt.n_samples < 2) throw AnalysisError("bootstrap needs at least two resamples");
  if (opt.frames_per_sample == 0) throw AnalysisError("frames_per_sample must be > 0");
  if (angles.size() != frames.frames.front().size()) throw AnalysisError("angle axis does not match the pixels");

  std::vector<std::size_t> all(frames.frames.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  BootstrapResult out;
  const auto pooled_mean = average_frames(frames, all);
  out.pooled = fit_gaussian(angles, pooled_mean);
  GaussianConstraints shape;
  shape.sigma = out.pooled.value.sigma;
  shape.height = out.pooled.value.height;
  shape.offset = out.pooled.value.offset;

  boost::random::uniform_int_distribution<std::size_t> pick(0, frames.frames.size() - 1);
  std::vector<std::size_t> idx(opt.frames_per_sample);
  double photons = 0.0;
  for (std::size_t s = 0; s < opt.n_samples; ++s) {
    auto rng = substream(opt.seed, 0xb0075742ULL, s);
    for (auto& i : idx) i = pick(rng);
    const auto mean = average_frames(frames, idx);
    for (double v : mean) photons += v * static_cast<double>(opt.frames_per_sample);
    out.centers.push_back(fit_gaussian(angles, mean, shape, out.pooled.window).value.center);
  }
  out.photons_per_sample = photons / static_cast<double>(opt.n_samples);

  for (double c : out.centers) out.mean += c;
  out.mean /= static_cast<double>(out.centers.size());
  for (double c : out.centers) out.variance += (c - out.mean) * (c - out.mean);
  out.variance /= static_cast<double>(out.centers.size() - 1);
  out.std_dev = std::sqrt(out.variance);
  return out;
}

}  // namespace gemspec
