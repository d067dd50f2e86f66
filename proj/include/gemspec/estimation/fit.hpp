#pragma once

// Least-squares fits: Gaussian peaks (Levenberg-Marquardt) and straight lines.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "gemspec/core/errors.hpp"

namespace gemspec {

/// uniform: ordinary least squares. poisson: Pearson weights 1 / f(x) for
/// photon-count data, refined by iterative reweighting.
enum class Weighting { uniform, poisson };

struct LmOptions {
  int max_iterations = 500;
  double step_tolerance = 1e-12;  ///< relative parameter step that counts as converged
  Weighting weighting = Weighting::uniform;  ///< used by the peak fits, not by the bare solver
};

struct LmResult {
  Eigen::VectorXd params;
  Eigen::VectorXd errors;  ///< 1 sigma from s^2 (J^T J)^-1
  double rss = 0.0;
  int iterations = 0;
};

/// Minimises sum w (y - f(x; p))^2 with w = 1 when `weights` is empty.
/// `model(x, p, grad)` returns f and writes df/dp into grad.
template <class Model>
LmResult levenberg_marquardt(const Model& model, Eigen::VectorXd p, std::span<const double> x,
                             std::span<const double> y, const LmOptions& opt = {},
                             std::span<const double> weights = {}) {
  const auto n = static_cast<Eigen::Index>(x.size());
  const Eigen::Index np = p.size();
  if (n <= np) throw AnalysisError(fmt::format("fit needs more than {} points, got {}", np, n));
  if (!weights.empty() && weights.size() != x.size()) throw AnalysisError("weights differ in length from the data");

  Eigen::MatrixXd jac(n, np);
  Eigen::VectorXd res(n), grad(np);
  auto evaluate = [&](const Eigen::VectorXd& params, bool with_jacobian) {
    double rss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double f = model(x[k], params, grad);
      const double sw = weights.empty() ? 1.0 : std::sqrt(weights[k]);
      res(i) = sw * (y[k] - f);
      rss += res(i) * res(i);
      if (with_jacobian) jac.row(i) = sw * grad.transpose();
    }
    return rss;
  };

  double rss = evaluate(p, true);
  if (!std::isfinite(rss)) throw AnalysisError("fit model is not finite at the initial guess");
  double lambda = 1e-3;
  LmResult out;
  bool converged = false;
  int it = 0;
  for (; it < opt.max_iterations && !converged; ++it) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * res;
    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index k = 0; k < np; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-300);
      const Eigen::VectorXd step = a.ldlt().solve(jtr);
      const Eigen::VectorXd trial = p + step;
      Eigen::MatrixXd saved_jac = jac;
      Eigen::VectorXd saved_res = res;
      const double trial_rss = evaluate(trial, true);
      if (std::isfinite(trial_rss) && trial_rss <= rss) {
        accepted = true;
        const double rel = step.norm() / (p.norm() + opt.step_tolerance);
        const bool tiny_gain = rss - trial_rss <= 1e-15 * rss;
        p = trial;
        rss = trial_rss;
        lambda = std::max(lambda / 10.0, 1e-12);
        if (rel <= opt.step_tolerance || tiny_gain || rss == 0.0) converged = true;
      } else {
        jac = std::move(saved_jac);
        res = std::move(saved_res);
        lambda *= 10.0;
        if (lambda > 1e14) {
          // no downhill step left at machine precision: a minimum
          converged = true;
          break;
        }
      }
    }
  }
  if (!converged) throw AnalysisError(fmt::format("fit did not converge in {} iterations", opt.max_iterations));
  if (!p.allFinite()) throw AnalysisError("fit diverged");

  evaluate(p, true);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  const double s2 = rss / static_cast<double>(n - np);
  Eigen::MatrixXd cov = jtj.completeOrthogonalDecomposition().pseudoInverse() * s2;
  out.params = p;
  out.errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  out.rss = rss;
  out.iterations = it;
  return out;
}

// --- Gaussian peak ---------------------------------------------------------

/// offset + height exp(-(x - center)^2 / (2 sigma^2))
struct GaussianParams {
  double center = 0.0;
  double sigma = 0.0;
  double height = 0.0;
  double offset = 0.0;

  double operator()(double x) const {
    const double u = (x - center) / sigma;
    return offset + height * std::exp(-0.5 * u * u);
  }
};

/// Parameters held fixed during a fit; the centre is always free.
struct GaussianConstraints {
  std::optional<double> sigma;
  std::optional<double> height;
  std::optional<double> offset;
};

/// Half-open index range [begin, end).
struct FitWindow {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct GaussianFit {
  GaussianParams value;
  GaussianParams error;  ///< 1 sigma; zero for fixed parameters
  GaussianConstraints fixed;
  FitWindow window;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Connected region above half maximum around the global maximum, widened by
/// its own width on each side so the flanks constrain width and offset. The
/// region is found on a [1 2 1]-smoothed copy, so a single noisy pixel does not
/// cut it short.
inline FitWindow auto_peak_window(std::span<const double> y) {
  if (y.empty()) throw AnalysisError("empty data");
  std::vector<double> s(y.begin(), y.end());
  for (int pass = 0; pass < 2 && s.size() >= 3; ++pass) {
    std::vector<double> t(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double left = s[i > 0 ? i - 1 : i], right = s[i + 1 < s.size() ? i + 1 : i];
      t[i] = 0.25 * left + 0.5 * s[i] + 0.25 * right;
    }
    s = std::move(t);
  }
  const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
  if (!(*mx > *mn)) throw AnalysisError("flat data: no peak to fit");
  const double half = *mn + 0.5 * (*mx - *mn);
  const auto peak = static_cast<std::size_t>(mx - s.begin());
  std::size_t lo = peak, hi = peak;
  while (lo > 0 && s[lo - 1] > half) --lo;
  while (hi + 1 < s.size() && s[hi + 1] > half) ++hi;
  // at least three samples of flank, so narrow peaks still leave a 4-parameter fit determined
  const std::size_t width = std::max<std::size_t>(hi - lo + 1, 3);
  FitWindow w;
  w.begin = lo >= width ? lo - width : 0;
  w.end = std::min(y.size(), hi + 1 + width);
  return w;
}

inline GaussianFit fit_gaussian(std::span<const double> x, std::span<const double> y,
                                const GaussianConstraints& fixed = {}, std::optional<FitWindow> window = {},
                                const LmOptions& opt = {}) {
  if (x.size() != y.size()) throw AnalysisError("x and y differ in length");
  const FitWindow w = window ? *window : auto_peak_window(y);
  if (w.end > x.size() || w.size() < 3) throw AnalysisError("fit window is empty or out of range");
  const auto xs = x.subspan(w.begin, w.size());
  const auto ys = y.subspan(w.begin, w.size());
  const auto [mn, mx] = std::minmax_element(ys.begin(), ys.end());
  if (!(*mx > *mn)) throw AnalysisError("flat fit window: no peak");

  // initial guesses from the window
  GaussianParams guess;
  guess.center = xs[static_cast<std::size_t>(mx - ys.begin())];
  guess.offset = fixed.offset.value_or(*mn);
  guess.height = fixed.height.value_or(*mx - guess.offset);
  {
    const double half = guess.offset + 0.5 * guess.height;
    std::size_t above = 0;
    for (double v : ys) above += v > half ? 1 : 0;
    const double dx = std::abs(xs.back() - xs.front()) / static_cast<double>(std::max<std::size_t>(xs.size() - 1, 1));
    guess.sigma = fixed.sigma.value_or(std::max(static_cast<double>(above) * dx / 2.3548, dx));
  }

  const bool free_sigma = !fixed.sigma, free_height = !fixed.height, free_offset = !fixed.offset;
  std::vector<int> slot;  // parameter index -> 0 center, 1 sigma, 2 height, 3 offset
  slot.push_back(0);
  if (free_sigma) slot.push_back(1);
  if (free_height) slot.push_back(2);
  if (free_offset) slot.push_back(3);

  auto unpack = [&](const Eigen::VectorXd& p) {
    GaussianParams g = guess;
    for (std::size_t k = 0; k < slot.size(); ++k) {
      const double v = p(static_cast<Eigen::Index>(k));
      switch (slot[k]) {
        case 0: g.center = v; break;
        case 1: g.sigma = v; break;
        case 2: g.height = v; break;
        default: g.offset = v; break;
      }
    }
    return g;
  };

  Eigen::VectorXd p0(static_cast<Eigen::Index>(slot.size()));
  for (std::size_t k = 0; k < slot.size(); ++k) {
    const double v = slot[k] == 0 ? guess.center : slot[k] == 1 ? guess.sigma : slot[k] == 2 ? guess.height : guess.offset;
    p0(static_cast<Eigen::Index>(k)) = v;
  }

  auto model = [&](double xv, const Eigen::VectorXd& p, Eigen::VectorXd& grad) {
    const GaussianParams g = unpack(p);
    const double d = xv - g.center;
    const double e = std::exp(-0.5 * d * d / (g.sigma * g.sigma));
    for (std::size_t k = 0; k < slot.size(); ++k) {
      double v = 0.0;
      switch (slot[k]) {
        case 0: v = g.height * e * d / (g.sigma * g.sigma); break;
        case 1: v = g.height * e * d * d / (g.sigma * g.sigma * g.sigma); break;
        case 2: v = e; break;
        default: v = 1.0; break;
      }
      grad(static_cast<Eigen::Index>(k)) = v;
    }
    return g.offset + g.height * e;
  };

  auto lm = levenberg_marquardt(model, p0, xs, ys, opt);
  if (opt.weighting == Weighting::poisson) {
    // Pearson weights from the current model, floored at 1e-3 of its maximum
    std::vector<double> wts(xs.size());
    Eigen::VectorXd scratch(p0.size());
    for (int pass = 0; pass < 3; ++pass) {
      double fmax = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) fmax = std::max(fmax, wts[i] = model(xs[i], lm.params, scratch));
      if (!(fmax > 0.0)) break;
      for (auto& v : wts) v = 1.0 / std::max(v, 1e-3 * fmax);
      lm = levenberg_marquardt(model, lm.params, xs, ys, opt, wts);
    }
  }
  GaussianFit fit;
  fit.value = unpack(lm.params);
  fit.value.sigma = std::abs(fit.value.sigma);
  for (std::size_t k = 0; k < slot.size(); ++k) {
    const double e = lm.errors(static_cast<Eigen::Index>(k));
    switch (slot[k]) {
      case 0: fit.error.center = e; break;
      case 1: fit.error.sigma = e; break;
      case 2: fit.error.height = e; break;
      default: fit.error.offset = e; break;
    }
  }
  fit.fixed = fixed;
  fit.window = w;
  fit.residual_norm = std::sqrt(lm.rss);
  fit.iterations = lm.iterations;
  return fit;
}

// --- Two Gaussians with a shared width -------------------------------------

struct TwoGaussianParams {
  double center1 = 0.0, center2 = 0.0;
  double sigma = 0.0;
  double height1 = 0.0, height2 = 0.0;
  double offset = 0.0;
};

struct TwoGaussianFit {
  TwoGaussianParams value;
  TwoGaussianParams error;
  double residual_norm = 0.0;
};

inline TwoGaussianFit fit_two_gaussians(std::span<const double> x, std::span<const double> y,
                                        const TwoGaussianParams& guess, const LmOptions& opt = {}) {
  auto model = [](double xv, const Eigen::VectorXd& p, Eigen::VectorXd& grad) {
    const double s2 = p(2) * p(2);
    const double d1 = xv - p(0), d2 = xv - p(1);
    const double e1 = std::exp(-0.5 * d1 * d1 / s2), e2 = std::exp(-0.5 * d2 * d2 / s2);
    grad(0) = p(3) * e1 * d1 / s2;
    grad(1) = p(4) * e2 * d2 / s2;
    grad(2) = (p(3) * e1 * d1 * d1 + p(4) * e2 * d2 * d2) / (s2 * p(2));
    grad(3) = e1;
    grad(4) = e2;
    grad(5) = 1.0;
    return p(5) + p(3) * e1 + p(4) * e2;
  };
  Eigen::VectorXd p0(6);
  p0 << guess.center1, guess.center2, guess.sigma, guess.height1, guess.height2, guess.offset;
  const auto lm = levenberg_marquardt(model, p0, x, y, opt);
  TwoGaussianFit fit;
  const auto& p = lm.params;
  const auto& e = lm.errors;
  fit.value = {p(0), p(1), std::abs(p(2)), p(3), p(4), p(5)};
  fit.error = {e(0), e(1), e(2), e(3), e(4), e(5)};
  fit.residual_norm = std::sqrt(lm.rss);
  return fit;
}

// --- Straight line ---------------------------------------------------------

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_error = 0.0;
  double intercept_error = 0.0;
  double residual_norm = 0.0;
  std::vector<bool> excluded;  ///< per input point
  std::size_t n_used = 0;

  double operator()(double x) const { return intercept + slope * x; }
};

/// Least-squares line. With `sigma`, points are weighted by 1/sigma^2 and the
/// uncertainties are absolute; otherwise they are scaled by the residual variance.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y,
                        std::optional<std::span<const double>> sigma = {},
                        const std::vector<bool>& exclude = {}) {
  if (x.size() != y.size()) throw AnalysisError("x and y differ in length");
  LineFit fit;
  fit.excluded.assign(x.size(), false);
  if (!exclude.empty()) {
    if (exclude.size() != x.size()) throw AnalysisError("exclusion mask differs in length");
    fit.excluded = exclude;
  }

  double sw = 0, sx = 0, sy = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (fit.excluded[i]) continue;
    const double w = sigma ? 1.0 / ((*sigma)[i] * (*sigma)[i]) : 1.0;
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
    ++used;
  }
  if (used < 2) throw AnalysisError("line fit needs at least two unmasked points");
  const double xm = sx / sw, ym = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (fit.excluded[i]) continue;
    const double w = sigma ? 1.0 / ((*sigma)[i] * (*sigma)[i]) : 1.0;
    sxx += w * (x[i] - xm) * (x[i] - xm);
    sxy += w * (x[i] - xm) * (y[i] - ym);
  }
  if (!(sxx > 0.0)) throw AnalysisError("line fit is rank deficient: all x values coincide");
  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;
  fit.n_used = used;

  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (fit.excluded[i]) continue;
    const double r = y[i] - fit(x[i]);
    rss += (sigma ? 1.0 / ((*sigma)[i] * (*sigma)[i]) : 1.0) * r * r;
  }
  fit.residual_norm = std::sqrt(rss);
  const double scale = sigma ? 1.0 : (used > 2 ? rss / static_cast<double>(used - 2) : 0.0);
  fit.slope_error = std::sqrt(scale / sxx);
  fit.intercept_error = std::sqrt(scale * (1.0 / sw + xm * xm / sxx));
  return fit;
}

/// Line fit with outlier rejection: points whose residual exceeds `threshold`
/// robust standard deviations (1.4826 MAD) are masked and the fit repeated until
/// the mask is stable. Parasitic diffraction orders show up as such outliers.
inline LineFit fit_line_robust(std::span<const double> x, std::span<const double> y,
                               std::optional<std::span<const double>> sigma = {}, double threshold = 5.0) {
  std::vector<bool> mask(x.size(), false);
  LineFit fit = fit_line(x, y, sigma);
  double scale_y = 0.0;
  for (double v : y) scale_y = std::max(scale_y, std::abs(v));
  for (int round = 0; round < 20; ++round) {
    std::vector<double> abs_res;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!mask[i]) abs_res.push_back(std::abs(y[i] - fit(x[i])));
    std::nth_element(abs_res.begin(), abs_res.begin() + static_cast<std::ptrdiff_t>(abs_res.size() / 2), abs_res.end());
    const double mad = abs_res[abs_res.size() / 2];
    const double cut = std::max(threshold * 1.4826 * mad, 1e-12 * (scale_y + 1e-300));
    std::vector<bool> next(x.size(), false);
    for (std::size_t i = 0; i < x.size(); ++i) next[i] = std::abs(y[i] - fit(x[i])) > cut;
    if (next == mask) break;
    mask = std::move(next);
    fit = fit_line(x, y, sigma, mask);
  }
  return fit;
}

}  // namespace gemspec
