#pragma once

// Two-peak resolvability under the generalized Rayleigh criterion.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "gemspec/core/errors.hpp"
#include "gemspec/core/formulas.hpp"
#include "gemspec/estimation/fit.hpp"

namespace gemspec {

/// Dip-to-peak ratio of two equal Gaussian beams exp(-2 (t -+ d/2)^2 / w^2)
/// separated by d = separation_in_waists * w. Returns 1 once the dip has vanished.
inline double rayleigh_contrast_threshold(double separation_in_waists = kRayleighFactor) {
  const double d = separation_in_waists;
  auto f = [d](double t) { return std::exp(-2.0 * (t - 0.5 * d) * (t - 0.5 * d)) + std::exp(-2.0 * (t + 0.5 * d) * (t + 0.5 * d)); };
  if (d <= 0.0) return 1.0;
  const auto best = boost::math::tools::brent_find_minima([&](double t) { return -f(t); }, 0.0, d, 50);
  const double peak = std::max(-best.second, f(0.0));
  return f(0.0) / peak;
}

struct TwoPeakOptions {
  double threshold = rayleigh_contrast_threshold();
  double smooth_bins = 0.0;  ///< Gaussian pre-smoothing width in samples; use for noisy histograms
  double min_relative_height = 0.2;  ///< second peak must reach this fraction of the maximum
  bool fit = true;                   ///< also fit two Gaussians with a shared width
};

struct TwoPeakResult {
  bool resolvable = false;
  double contrast = 1.0;  ///< valley / lower of the two peaks
  double threshold = 0.0;
  double epsilon = 0.0;   ///< input separation, rad/s
  std::optional<double> peak1, peak2, valley;  ///< positions on the x axis
  bool fitted = false;
  double fitted_separation = 0.0;  ///< |c2 - c1| on the x axis
  double fitted_separation_error = 0.0;
  std::optional<TwoGaussianFit> fit;
};

namespace detail {

// Vertex of the parabola through (i-1, i, i+1); returns (offset in samples, value).
inline std::pair<double, double> parabolic_vertex(std::span<const double> y, std::size_t i) {
  if (i == 0 || i + 1 >= y.size()) return {0.0, y[i]};
  const double a = y[i - 1], b = y[i], c = y[i + 1];
  const double den = a - 2.0 * b + c;
  if (den == 0.0) return {0.0, b};
  const double off = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
  return {off, b - 0.25 * (a - c) * off};
}

inline std::vector<double> smooth(std::span<const double> y, double sigma_bins) {
  std::vector<double> out(y.begin(), y.end());
  if (sigma_bins <= 0.0) return out;
  const auto r = static_cast<long>(std::ceil(4.0 * sigma_bins));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double norm = 0.0;
  for (long j = -r; j <= r; ++j) norm += k[static_cast<std::size_t>(j + r)] = std::exp(-0.5 * j * j / (sigma_bins * sigma_bins));
  const auto n = static_cast<long>(y.size());
  for (long i = 0; i < n; ++i) {
    double s = 0.0;
    for (long j = -r; j <= r; ++j) s += k[static_cast<std::size_t>(j + r)] * y[static_cast<std::size_t>(std::clamp(i + j, 0L, n - 1))];
    out[static_cast<std::size_t>(i)] = s / norm;
  }
  return out;
}

}  // namespace detail

/// Classifies a one-dimensional profile (far-field row or photon histogram) of a
/// two-peak input with separation epsilon. The second peak is the local maximum
/// with the largest prominence relative to the global maximum.
inline TwoPeakResult resolve_two_peaks(std::span<const double> x, std::span<const double> y, double epsilon,
                                       const TwoPeakOptions& opt = {}) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw AnalysisError("two-peak analysis needs the input separation epsilon >= 0");
  if (x.size() != y.size() || x.size() < 5) throw AnalysisError("two-peak analysis needs at least five samples");
  const auto ys = detail::smooth(y, opt.smooth_bins);
  const double dx = (x.back() - x.front()) / static_cast<double>(x.size() - 1);

  TwoPeakResult out;
  out.threshold = opt.threshold;
  out.epsilon = epsilon;
  const auto g = static_cast<std::size_t>(std::max_element(ys.begin(), ys.end()) - ys.begin());
  if (!(ys[g] > 0.0)) throw AnalysisError("profile has no positive peak");
  out.peak1 = x[g];

  std::optional<std::size_t> second, dip;
  double best = 0.0;
  for (std::size_t i = 1; i + 1 < ys.size(); ++i) {
    if (i == g || !(ys[i] > ys[i - 1] && ys[i] >= ys[i + 1])) continue;
    if (ys[i] < opt.min_relative_height * ys[g]) continue;
    const auto [lo, hi] = std::minmax(i, g);
    const auto v = static_cast<std::size_t>(std::min_element(ys.begin() + static_cast<long>(lo), ys.begin() + static_cast<long>(hi) + 1) - ys.begin());
    const double prominence = ys[i] - ys[v];
    if (prominence > best) {
      best = prominence;
      second = i;
      dip = v;
    }
  }

  if (second && best > 1e-9 * ys[g]) {
    const auto [o1, p1] = detail::parabolic_vertex(ys, g);
    const auto [o2, p2] = detail::parabolic_vertex(ys, *second);
    const auto [ov, pv] = detail::parabolic_vertex(ys, *dip);
    out.peak1 = x[g] + o1 * dx;
    out.peak2 = x[*second] + o2 * dx;
    out.valley = x[*dip] + ov * dx;
    out.contrast = std::clamp(pv / std::min(p1, p2), 0.0, 1.0);
  }
  out.resolvable = out.contrast <= opt.threshold;

  if (!opt.fit) return out;
  // region around both peaks above 5% of the maximum, plus a margin
  const double level = 0.05 * ys[g];
  std::size_t lo = std::min(g, second.value_or(g)), hi = std::max(g, second.value_or(g));
  while (lo > 0 && ys[lo - 1] > level) --lo;
  while (hi + 1 < ys.size() && ys[hi + 1] > level) ++hi;
  const std::size_t margin = std::max<std::size_t>((hi - lo) / 4, 3);
  lo = lo > margin ? lo - margin : 0;
  hi = std::min(ys.size() - 1, hi + margin);

  TwoGaussianParams guess;
  const double span = x[hi] - x[lo];
  if (out.peak2) {
    guess.center1 = std::min(*out.peak1, *out.peak2);
    guess.center2 = std::max(*out.peak1, *out.peak2);
    guess.sigma = std::max(0.25 * (guess.center2 - guess.center1), dx);
  } else {
    guess.center1 = *out.peak1 - 0.1 * span;
    guess.center2 = *out.peak1 + 0.1 * span;
    guess.sigma = std::max(0.15 * span, dx);
  }
  guess.height1 = guess.height2 = 0.5 * ys[g];
  guess.offset = 0.0;
  try {
    auto fit = fit_two_gaussians(x.subspan(lo, hi - lo + 1), std::span<const double>(ys).subspan(lo, hi - lo + 1), guess);
    out.fitted = true;
    out.fitted_separation = std::abs(fit.value.center2 - fit.value.center1);
    out.fitted_separation_error = std::hypot(fit.error.center1, fit.error.center2);
    out.fit = fit;
  } catch (const AnalysisError&) {
    // a single merged peak leaves the two-centre model degenerate
    if (out.peak2) throw;
  }
  return out;
}

/// First epsilon at which the contrast falls to the threshold, linearly
/// interpolated between sweep points; nullopt if it never does.
inline std::optional<double> resolution_threshold(std::span<const double> epsilons, std::span<const double> contrasts,
                                                  double threshold = rayleigh_contrast_threshold()) {
  if (epsilons.size() != contrasts.size()) throw AnalysisError("sweep axes differ in length");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (contrasts[i] > threshold) continue;
    if (i == 0) return epsilons[0];
    const double t = (contrasts[i - 1] - threshold) / (contrasts[i - 1] - contrasts[i]);
    return epsilons[i - 1] + t * (epsilons[i] - epsilons[i - 1]);
  }
  return std::nullopt;
}

inline double resolving_power(double delta_omega, double omega0) {
  if (!(delta_omega > 0.0)) throw AnalysisError("resolution delta_omega must be > 0");
  return omega0 / delta_omega;
}

}  // namespace gemspec
