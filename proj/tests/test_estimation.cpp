#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "gemspec/core/formulas.hpp"
#include "gemspec/estimation/bootstrap.hpp"
#include "gemspec/estimation/fisher.hpp"
#include "gemspec/estimation/fit.hpp"
#include "gemspec/estimation/rayleigh.hpp"

using namespace gemspec;

namespace {

std::vector<double> axis(double lo, double hi, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return x;
}

double gauss(double x, double c, double s) { return std::exp(-0.5 * (x - c) * (x - c) / (s * s)); }

// Pixel pdfs of N(theta; slope * omega, sigma) on a fixed angle axis.
EmpiricalPdfFamily gaussian_family(double slope, double sigma, double step, const std::vector<double>& theta,
                                   int half_rows = 2) {
  EmpiricalPdfFamily f;
  for (int j = -half_rows; j <= half_rows; ++j) {
    const double omega = j * step;
    std::vector<double> row(theta.size());
    double total = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) total += row[i] = gauss(theta[i], slope * omega, sigma);
    for (auto& v : row) v /= total;
    f.detunings.push_back(omega);
    f.pdf.push_back(std::move(row));
    f.photons.push_back(5000.0);
  }
  return f;
}

FrameSet frames_of(std::vector<std::vector<std::uint32_t>> frames) {
  FrameSet fs;
  fs.meta.n_pixels = frames.front().size();
  fs.frames = std::move(frames);
  return fs;
}

}  // namespace

// --- Gaussian fit ------------------------------------------------------------

TEST(GaussianFit, RecoversNoiselessParameters) {
  const auto x = axis(-10e-3, 10e-3, 201);
  const GaussianParams truth{1.234e-3, 0.9e-3, 37.5, 2.25};
  std::vector<double> y;
  for (double v : x) y.push_back(truth(v));
  const auto fit = fit_gaussian(x, y);
  EXPECT_NEAR(fit.value.center, truth.center, 1e-6 * truth.sigma);
  EXPECT_NEAR(fit.value.sigma / truth.sigma, 1.0, 1e-6);
  EXPECT_NEAR(fit.value.height / truth.height, 1.0, 1e-6);
  EXPECT_NEAR(fit.value.offset / truth.offset, 1.0, 1e-6);
}

TEST(GaussianFit, FixedParametersStayFixed) {
  const auto x = axis(-5.0, 5.0, 101);
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * gauss(v, 0.7, 1.1) + 0.5);
  GaussianConstraints fixed;
  fixed.sigma = 1.1;
  fixed.height = 3.0;
  fixed.offset = 0.5;
  const auto fit = fit_gaussian(x, y, fixed);
  EXPECT_NEAR(fit.value.center, 0.7, 1e-9);
  EXPECT_EQ(fit.value.sigma, 1.1);
  EXPECT_EQ(fit.error.sigma, 0.0);
}

TEST(GaussianFit, WindowSelectsOnePeakOfTwo) {
  const auto x = axis(-10.0, 10.0, 401);
  std::vector<double> y;
  for (double v : x) y.push_back(2.0 * gauss(v, -4.0, 0.8) + 1.0 * gauss(v, 3.5, 0.8));
  const auto left = fit_gaussian(x, y);
  EXPECT_NEAR(left.value.center, -4.0, 1e-6);
  FitWindow w{250, 400};  // x from 2.5 to 10
  EXPECT_NEAR(fit_gaussian(x, y, {}, w).value.center, 3.5, 1e-6);
}

TEST(GaussianFit, FlatAndBadInputThrow) {
  const auto x = axis(0.0, 1.0, 20);
  const std::vector<double> flat(20, 3.0);
  EXPECT_THROW(fit_gaussian(x, flat), AnalysisError);
  EXPECT_THROW(fit_gaussian(x, std::vector<double>(19, 1.0)), AnalysisError);
  std::vector<double> y(20, 0.0);
  y[10] = 1.0;
  EXPECT_THROW(fit_gaussian(x, y, {}, FitWindow{18, 30}), AnalysisError);
}

TEST(GaussianFit, PoissonCenterSpreadMatchesShotNoise) {
  // N photons spread over a Gaussian: the centre scatters by sigma / sqrt(N)
  const double sigma = 1.2e-3;
  const double n_photons = 1250.0;
  CameraModel cam;
  cam.mean_signal = n_photons;
  cam.mean_noise = cam.mean_dark = 0.0;
  cam.seed = 11;
  const auto theta = axis(-30e-3, 30e-3, 6001);
  std::vector<double> intensity;
  for (double t : theta) intensity.push_back(gauss(t, 0.0, sigma));
  const auto fs = sample_frames(theta, intensity, theta[1] - theta[0], cam, 300);
  const auto angles = cam.pixel_angles();

  LmOptions opt;
  opt.weighting = Weighting::poisson;
  double s = 0.0, s2 = 0.0;
  for (const auto& f : fs.frames) {
    const std::vector<double> y(f.begin(), f.end());
    const double c = fit_gaussian(angles, y, {}, {}, opt).value.center;
    s += c;
    s2 += c * c;
  }
  const double n = static_cast<double>(fs.frames.size());
  const double sd = std::sqrt((s2 - s * s / n) / (n - 1));
  EXPECT_NEAR(sd / (sigma / std::sqrt(n_photons)), 1.0, 0.25);
}

TEST(TwoGaussianFit, RecoversSeparation) {
  const auto x = axis(-6.0, 6.0, 241);
  std::vector<double> y;
  for (double v : x) y.push_back(gauss(v, -1.5, 0.7) + 0.8 * gauss(v, 1.6, 0.7) + 0.1);
  TwoGaussianParams guess{-1.0, 1.0, 1.0, 0.5, 0.5, 0.0};
  const auto fit = fit_two_gaussians(x, y, guess);
  EXPECT_NEAR(fit.value.center1, -1.5, 1e-6);
  EXPECT_NEAR(fit.value.center2, 1.6, 1e-6);
  EXPECT_NEAR(fit.value.sigma, 0.7, 1e-6);
}

// --- Line fit ----------------------------------------------------------------

TEST(LineFit, ExactLine) {
  const auto x = axis(-0.78, 0.78, 40);
  std::vector<double> y;
  for (double v : x) y.push_back(13.09 * v - 0.25);
  const auto fit = fit_line(x, y);
  EXPECT_NEAR(fit.slope, 13.09, 1e-12);
  EXPECT_NEAR(fit.intercept, -0.25, 1e-12);
  EXPECT_NEAR(fit.slope_error, 0.0, 1e-10);
  EXPECT_EQ(fit.n_used, 40u);
}

TEST(LineFit, WeightedErrorsAreAbsolute) {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0}, y{0.0, 1.0, 2.0, 3.0}, sig{0.1, 0.1, 0.1, 0.1};
  const auto fit = fit_line(x, y, std::span<const double>(sig));
  // var(slope) = sigma^2 / sum (x - xm)^2 = 0.01 / 5
  EXPECT_NEAR(fit.slope_error, std::sqrt(0.01 / 5.0), 1e-12);
}

TEST(LineFit, RankDeficiencyAndMaskErrors) {
  const std::vector<double> x{1.0, 1.0, 1.0}, y{0.0, 1.0, 2.0};
  EXPECT_THROW(fit_line(x, y), AnalysisError);
  const std::vector<double> x2{0.0, 1.0, 2.0};
  EXPECT_THROW(fit_line(x2, y, {}, std::vector<bool>{true, true, false}), AnalysisError);
  EXPECT_THROW(fit_line(x2, y, {}, std::vector<bool>{true}), AnalysisError);
}

TEST(LineFit, RobustFitIgnoresParasiticPoints) {
  const auto x = axis(-0.78, 0.78, 40);
  std::vector<double> y;
  for (std::size_t i = 0; i < x.size(); ++i) y.push_back(12.4 * x[i] + 0.01 * std::sin(7.0 * static_cast<double>(i)));
  const auto clean = fit_line_robust(x, y);
  auto dirty = y;
  dirty[3] = 0.0;
  dirty[17] = -5.0;
  dirty[36] = 0.5;
  const auto robust = fit_line_robust(x, dirty);
  EXPECT_TRUE(robust.excluded[3] && robust.excluded[17] && robust.excluded[36]);
  EXPECT_EQ(robust.n_used, 37u);
  std::vector<bool> mask(40, false);
  mask[3] = mask[17] = mask[36] = true;
  EXPECT_NEAR(robust.slope, fit_line(x, y, {}, mask).slope, 1e-12);
  EXPECT_NEAR(robust.slope, clean.slope, 1e-3);
  EXPECT_GT(std::abs(fit_line(x, dirty).slope - clean.slope), 0.1);
}

// --- Fisher information and Cramer-Rao ---------------------------------------

TEST(Fisher, GaussianFamilyMatchesClosedForm) {
  const double slope = 2.0e-9, sigma = 0.5e-3;  // rad per rad/s, rad
  const auto theta = axis(-8e-3, 8e-3, 1601);   // 20 samples per sigma
  const double closed = (slope / sigma) * (slope / sigma);
  const double step = 0.01 * sigma / slope;
  const auto f = gaussian_family(slope, sigma, step, theta);
  EXPECT_NEAR(fisher_information(f, 2) / closed, 1.0, 0.01);
}

TEST(Fisher, ConvergesAsStepShrinks) {
  const double slope = 1.0, sigma = 1.0;
  const auto theta = axis(-12.0, 12.0, 2401);
  double previous = std::numeric_limits<double>::infinity();
  for (double step : {0.8, 0.4, 0.2, 0.1, 0.05}) {
    const double err = std::abs(fisher_information(gaussian_family(slope, sigma, step, theta), 2) - 1.0);
    EXPECT_LT(err, previous) << step;
    previous = err;
  }
  EXPECT_LT(previous, 0.01);
}

TEST(Fisher, IdenticalNeighboursCarryNoInformation) {
  EmpiricalPdfFamily f;
  f.detunings = {0.0, 1.0, 2.0};
  f.pdf.assign(3, std::vector<double>{0.2, 0.5, 0.3});
  f.photons.assign(3, 100.0);
  EXPECT_DOUBLE_EQ(fisher_information(f, 1), 0.0);
  const auto curve = fisher_curve(f);
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_TRUE(std::isinf(curve[0].cr_std));
}

TEST(Fisher, ShiftOfTheAngleAxisDoesNotMatter) {
  const auto theta = axis(-8.0, 8.0, 801);
  const auto f = gaussian_family(1.0, 1.0, 0.05, theta);
  auto shifted = f;
  for (auto& row : shifted.pdf) row.insert(row.begin(), 37, 0.0);  // same pdfs, pixels relabelled
  EXPECT_NEAR(fisher_information(shifted, 2), fisher_information(f, 2), 1e-12);
}

TEST(Fisher, FloorExcludesEmptyPixels) {
  EmpiricalPdfFamily f;
  f.detunings = {0.0, 1.0, 2.0};
  f.pdf = {{0.5, 0.5, 0.0}, {0.5, 0.5, 0.0}, {0.3, 0.6, 0.1}};
  f.photons.assign(3, 10.0);
  const double expected = (0.2 / 2) * (0.2 / 2) / 0.5 + (0.1 / 2) * (0.1 / 2) / 0.5;
  EXPECT_NEAR(fisher_information(f, 1), expected, 1e-15);
}

TEST(Fisher, Errors) {
  EmpiricalPdfFamily f;
  f.detunings = {0.0, 1.0, 2.0};
  f.pdf = {{0.5, 0.5}, {0.0, 0.0}, {0.5, 0.5}};
  f.photons.assign(3, 1.0);
  EXPECT_THROW(fisher_information(f, 1), AnalysisError);
  EXPECT_THROW(fisher_information(f, 0), AnalysisError);
  EXPECT_THROW(fisher_information(f, 2), AnalysisError);
  f.detunings = {0.0, 1.0, 3.0};
  EXPECT_THROW(f.validate(), AnalysisError);
  const std::vector<double> det{0.0, 1.0, 2.0};
  EXPECT_THROW(EmpiricalPdfFamily::from_counts(det, {{1, 2}, {0, 0}, {3, 1}}), AnalysisError);
}

TEST(Fisher, FromCountsNormalises) {
  const std::vector<double> det{0.0, 1.0, 2.0};
  const auto f = EmpiricalPdfFamily::from_counts(det, {{1, 3}, {2, 2}, {4, 0}});
  EXPECT_DOUBLE_EQ(f.pdf[0][1], 0.75);
  EXPECT_DOUBLE_EQ(f.photons[2], 4.0);
}

TEST(CramerRao, ReferenceValue) {
  const double w_omega = units::angular(91.7e3);
  const double fisher = 1.0 / ((0.5 * w_omega) * (0.5 * w_omega));
  const double bound = cramer_rao_bound(fisher, 5000.0);
  EXPECT_NEAR(units::ordinary(bound) / 648.0, 1.0, 0.01);
  EXPECT_NEAR(cramer_rao_bound(fisher, 20000.0), 0.5 * bound, 1e-12 * bound);
  EXPECT_THROW(cramer_rao_bound(0.0, 10.0), AnalysisError);
  EXPECT_THROW(cramer_rao_bound(1.0, 0.0), AnalysisError);
}

TEST(CramerRao, CurveUsesPhotonsPerEstimate) {
  const auto theta = axis(-8.0, 8.0, 801);
  const auto f = gaussian_family(1.0, 1.0, 0.05, theta, 3);
  const auto a = fisher_curve(f);
  const auto b = fisher_curve(f, 1250.0);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_DOUBLE_EQ(a[k].photons, 5000.0);
    EXPECT_NEAR(b[k].cr_std, 2.0 * a[k].cr_std, 1e-12);
  }
}

// --- Bootstrap ---------------------------------------------------------------

TEST(Bootstrap, IdenticalFramesGiveZeroSpread) {
  std::vector<std::uint32_t> frame(60, 0);
  for (std::size_t i = 20; i < 40; ++i) frame[i] = static_cast<std::uint32_t>(10 * gauss(static_cast<double>(i), 29.3, 3.0) + 0.5);
  const auto fs = frames_of(std::vector<std::vector<std::uint32_t>>(50, frame));
  const auto angles = axis(-30.0, 29.0, 60);
  BootstrapOptions opt;
  opt.n_samples = 20;
  opt.frames_per_sample = 10;
  const auto r = bootstrap_position(fs, angles, opt);
  EXPECT_EQ(r.centers.size(), 20u);
  EXPECT_DOUBLE_EQ(r.variance, 0.0);
  double per_frame = 0.0;
  for (auto v : frame) per_frame += v;
  EXPECT_NEAR(r.photons_per_sample, 10.0 * per_frame, 1e-9);
}

TEST(Bootstrap, PhotonsPerSampleAndDeterminism) {
  CameraModel cam;
  cam.mean_noise = cam.mean_dark = 0.0;
  const auto theta = axis(-30e-3, 30e-3, 3001);
  std::vector<double> intensity;
  for (double t : theta) intensity.push_back(gauss(t, 1e-3, 0.6e-3));
  const auto fs = sample_frames(theta, intensity, theta[1] - theta[0], cam, 2000);
  const auto angles = cam.pixel_angles();
  const auto a = bootstrap_position(fs, angles);
  EXPECT_NEAR(a.photons_per_sample / 1250.0, 1.0, 0.05);
  EXPECT_GT(a.std_dev, 0.0);
  // shot-noise scale: sigma / sqrt(photons), within a factor 2
  EXPECT_LT(a.std_dev, 2.0 * 0.6e-3 / std::sqrt(1250.0));
  const auto b = bootstrap_position(fs, angles);
  EXPECT_EQ(a.centers, b.centers);
  BootstrapOptions other;
  other.seed = 2;
  EXPECT_NE(a.centers, bootstrap_position(fs, angles, other).centers);
}

TEST(Bootstrap, Errors) {
  const auto angles = axis(0.0, 1.0, 4);
  EXPECT_THROW(bootstrap_position(FrameSet{}, angles), AnalysisError);
  const auto fs = frames_of({{0, 1, 0, 0}});
  EXPECT_THROW(bootstrap_position(fs, axis(0.0, 1.0, 5)), AnalysisError);
  BootstrapOptions opt;
  opt.n_samples = 1;
  EXPECT_THROW(bootstrap_position(fs, angles, opt), AnalysisError);
}

// --- Two-peak resolution -----------------------------------------------------

TEST(Rayleigh, ThresholdValue) {
  const double t = rayleigh_contrast_threshold();
  EXPECT_NEAR(t, 0.80, 0.01);
  EXPECT_GT(rayleigh_contrast_threshold(2.0), 0.0);
  EXPECT_LT(rayleigh_contrast_threshold(2.0), t);
}

TEST(Rayleigh, SinglePeakIsNotResolvable) {
  const auto x = axis(-10.0, 10.0, 401);
  std::vector<double> y;
  for (double v : x) y.push_back(gauss(v, 0.3, 1.0));
  const auto r = resolve_two_peaks(x, y, 0.0);
  EXPECT_FALSE(r.resolvable);
  EXPECT_DOUBLE_EQ(r.contrast, 1.0);
  EXPECT_FALSE(r.peak2);
}

TEST(Rayleigh, WellSeparatedPeaksAreResolvable) {
  const double w = 1.0;  // 1/e^2 intensity half-width, sigma = w / 2
  const auto x = axis(-10.0, 10.0, 801);
  std::vector<double> y;
  for (double v : x) y.push_back(gauss(v, -1.5 * w, 0.5 * w) + gauss(v, 1.5 * w, 0.5 * w));
  const auto r = resolve_two_peaks(x, y, 1.0);
  EXPECT_TRUE(r.resolvable);
  // valley 2 exp(-4.5) over a peak of 1 + exp(-18)
  EXPECT_NEAR(r.contrast, 2.0 * std::exp(-4.5), 1e-4);
  ASSERT_TRUE(r.fitted);
  EXPECT_NEAR(r.fitted_separation, 3.0 * w, 1e-6);
}

TEST(Rayleigh, ContrastAtTheCriterionEqualsThreshold) {
  const double d = kRayleighFactor;
  const auto x = axis(-6.0, 6.0, 2401);
  std::vector<double> y;
  for (double v : x) y.push_back(gauss(v, -0.5 * d, 0.5) + gauss(v, 0.5 * d, 0.5));
  const auto r = resolve_two_peaks(x, y, 1.0);
  EXPECT_NEAR(r.contrast, rayleigh_contrast_threshold(), 1e-4);
}

TEST(Rayleigh, NegativeEpsilonThrows) {
  const auto x = axis(-1.0, 1.0, 11);
  const std::vector<double> y(11, 1.0);
  EXPECT_THROW(resolve_two_peaks(x, y, -1.0), AnalysisError);
  EXPECT_THROW(resolve_two_peaks(x, y, std::numeric_limits<double>::quiet_NaN()), AnalysisError);
}

TEST(Rayleigh, ThresholdInterpolation) {
  const std::vector<double> eps{100.0, 200.0, 300.0}, c{1.0, 0.6, 0.1};
  EXPECT_NEAR(*resolution_threshold(eps, c, 0.8), 150.0, 1e-12);
  EXPECT_FALSE(resolution_threshold(eps, std::vector<double>{1.0, 0.95, 0.9}, 0.8));
  EXPECT_DOUBLE_EQ(*resolution_threshold(eps, std::vector<double>{0.5, 0.4, 0.1}, 0.8), 100.0);
}

TEST(ResolvingPower, ReferenceValues) {
  const double omega0 = units::angular(377e12);
  EXPECT_NEAR(resolving_power(units::angular(120e3), omega0) / 3.14e9, 1.0, 0.005);
  EXPECT_NEAR(resolving_power(units::angular(150e3), omega0) / 2.5e9, 1.0, 0.01);
  EXPECT_DOUBLE_EQ(resolving_power(omega0, omega0), 1.0);
  EXPECT_THROW(resolving_power(0.0, omega0), AnalysisError);
}
