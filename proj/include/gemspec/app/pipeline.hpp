#pragma once

// End-to-end pipeline without file I/O: scan, detect, analyze, limits.
// The command-line front end and the acceptance checks both go through here.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "gemspec/core/errors.hpp"
#include "gemspec/core/formulas.hpp"
#include "gemspec/detector/camera.hpp"
#include "gemspec/estimation/bootstrap.hpp"
#include "gemspec/estimation/fisher.hpp"
#include "gemspec/estimation/fit.hpp"
#include "gemspec/estimation/rayleigh.hpp"
#include "gemspec/io/config.hpp"
#include "gemspec/optics/mask_image.hpp"
#include "gemspec/optics/scan.hpp"

namespace gemspec {

// --- limits ------------------------------------------------------------------

inline nlohmann::json limits_report(const PhysicalConfig& cfg) {
  const auto eff = efficiency_chain(cfg);
  const auto lim = resolution_limits(cfg);
  nlohmann::json stages = nlohmann::json::array();
  const auto cumulative = eff.cumulative();
  for (std::size_t k = 0; k < eff.stages.size(); ++k)
    stages.push_back({{"stage", eff.stages[k].name}, {"factor", eff.stages[k].factor}, {"cumulative", cumulative[k]}});
  return {
      {"bandwidth_hz", units::ordinary(cfg.bandwidth())},
      {"eta_absorption_formula", eff.eta_absorption_formula},
      {"eta_absorption", eff.eta_absorption},
      {"eta_memory", eff.eta_memory},
      {"eta_total", eff.eta_total},
      {"efficiency_stages", stages},
      {"w_theta_mrad", lim.w_theta / units::mrad},
      {"w_omega_hz", units::ordinary(lim.w_omega)},
      {"delta_omega_hz", units::ordinary(lim.delta_omega)},
      {"resolving_power", lim.resolving_power},
      {"k_max_cycles_per_mm", lim.k_max / kTwoPi * units::mm},
      {"slope_mrad_per_mhz", angular_dispersion_mrad_per_mhz(cfg)},
      {"slm_k_max_cycles_per_mm", cfg.slm_k_max / kTwoPi * units::mm},
      {"theta_max_mrad", max_deflection_angle(cfg) / units::mrad},
      {"warnings", eff.warnings},
  };
}

inline std::string format_limits(const nlohmann::json& r) {
  std::string s;
  auto line = [&s](std::string_view name, std::string value) { s += fmt::format("{:<34}{}\n", name, value); };
  line("memory bandwidth B", fmt::format("2pi x {:.4g} MHz", r["bandwidth_hz"].get<double>() / 1e6));
  line("absorption eta (formula)", fmt::format("{:.2f} %", 100 * r["eta_absorption_formula"].get<double>()));
  line("absorption eta (used)", fmt::format("{:.2f} %", 100 * r["eta_absorption"].get<double>()));
  line("memory efficiency", fmt::format("{:.3f} %", 100 * r["eta_memory"].get<double>()));
  line("total efficiency", fmt::format("{:.4f} %", 100 * r["eta_total"].get<double>()));
  line("angular waist w_theta", fmt::format("{:.4g} mrad", r["w_theta_mrad"].get<double>()));
  line("frequency waist w_omega", fmt::format("2pi x {:.4g} kHz", r["w_omega_hz"].get<double>() / 1e3));
  line("resolution delta_omega", fmt::format("2pi x {:.4g} kHz", r["delta_omega_hz"].get<double>() / 1e3));
  line("resolving power R_p", fmt::format("{:.3e}", r["resolving_power"].get<double>()));
  line("diffraction k_max", fmt::format("2pi x {:.4g} mm^-1", r["k_max_cycles_per_mm"].get<double>()));
  line("dispersion d theta / d f", fmt::format("{:.4g} mrad/MHz", r["slope_mrad_per_mhz"].get<double>()));
  line(fmt::format("theta_max at 2pi x {:.3g} mm^-1", r["slm_k_max_cycles_per_mm"].get<double>()),
       fmt::format("{:.4g} mrad", r["theta_max_mrad"].get<double>()));
  return s;
}

// --- scan ----------------------------------------------------------------------

struct ScanRequest {
  std::string mask = "ideal";  ///< ideal | wrapped | blurred | calib | zero | image:<path>
  std::optional<double> kappa;    ///< rad/m
  std::optional<std::size_t> steps;
  std::optional<double> span;     ///< rad/s
  std::optional<double> epsilon;  ///< two-peak separation, rad/s
};

struct ScanResult {
  AngularSpectrum spectrum;
  PhysicalConfig physics;  ///< with the kappa actually used
  std::vector<std::string> warnings;
  std::optional<CalibrationBands> bands;
};

inline PhaseMask build_mask(const std::string& kind, const Settings& s, const PhysicalConfig& cfg, const Grid2D& grid) {
  if (kind == "ideal") return ideal_prism_mask(cfg, grid);
  if (kind == "zero") return zero_mask(grid);
  if (kind == "wrapped") return wrap_and_blur_mask(ideal_prism_mask(cfg, grid), 0.0, true, s.mask.contrast);
  if (kind == "blurred")
    return wrap_and_blur_mask(ideal_prism_mask(cfg, grid), s.mask.blur_or_default(cfg), true, s.mask.contrast);
  if (kind == "calib") return gradient_calibration_mask(cfg, grid, s.mask.flip_every_px, cfg.slm_pixels_per_length);
  if (kind.starts_with("image:")) return load_mask_image(kind.substr(6), grid);
  throw ConfigError(fmt::format("unknown mask '{}'; use ideal, wrapped, blurred, calib, zero or image:<path>", kind));
}

inline ScanResult run_scan(const Settings& s, const ScanRequest& req) {
  ScanResult out;
  out.physics = s.physics;
  if (req.kappa) out.physics.kappa = *req.kappa;
  out.physics.validate();
  const auto& cfg = out.physics;

  const double span = req.span.value_or(s.scan.span);
  const std::size_t steps = req.steps.value_or(s.scan.steps);
  const auto detunings = scan_detunings(span, steps);
  const auto spectrum = req.epsilon ? PulseSpectrum::double_gaussian(cfg.pulse_sigma_omega(), *req.epsilon)
                                    : PulseSpectrum::gaussian(cfg.pulse_sigma_omega());
  if (req.epsilon && !(*req.epsilon >= 0.0)) throw ConfigError("--epsilon must be >= 0");

  const double edge = 0.5 * cfg.bandwidth();
  for (double d : detunings) {
    if (std::abs(d) > edge) {
      out.warnings.push_back(fmt::format(
          "scan reaches 2pi x {:.4g} kHz, beyond the memory band edge 2pi x {:.4g} kHz; those rows are truncated by the cloud",
          units::ordinary(std::abs(d)) / units::kHz, units::ordinary(edge) / units::kHz));
      break;
    }
  }

  const Grid2D grid = make_scan_grid(cfg, s.grid, detunings, spectrum);
  const CloudDensity cloud = build_cloud(cfg, grid, s.super_gaussian_order);
  const PhaseMask mask = build_mask(req.mask, s, cfg, grid);
  out.warnings.insert(out.warnings.end(), mask.warnings.begin(), mask.warnings.end());
  out.bands = mask.bands;

  ScanOptions opt;
  opt.far_field = s.far_field;
  opt.max_angle = s.max_angle;
  out.spectrum = frequency_scan(cfg, cloud, mask, detunings, spectrum, opt);
  return out;
}

// --- detect --------------------------------------------------------------------

inline std::vector<FrameSet> detect_spectrum(const AngularSpectrum& spectrum, const CameraModel& cam, std::size_t n_frames) {
  if (n_frames == 0) throw ConfigError("--frames must be > 0");
  std::vector<FrameSet> sets;
  sets.reserve(spectrum.rows());
  for (std::size_t j = 0; j < spectrum.rows(); ++j) {
    auto fs = sample_frames(spectrum.angles, spectrum.row(j), spectrum.angular_resolution, cam, n_frames, j);
    fs.meta.detuning = spectrum.detunings[j];
    fs.meta.mask = spectrum.mask;
    if (spectrum.spectrum.two_peak) fs.meta.epsilon = spectrum.spectrum.separation;
    sets.push_back(std::move(fs));
  }
  return sets;
}

inline std::vector<double> pixel_angles_of(const FrameSet& fs) {
  CameraModel cam;
  cam.n_pixels = fs.meta.n_pixels;
  cam.pixel_pitch = fs.meta.pixel_pitch;
  return cam.pixel_angles();
}

namespace detail {

inline void require_frames(const std::vector<FrameSet>& sets, std::size_t min_rows, std::string_view mode) {
  if (sets.size() < min_rows)
    throw AnalysisError(fmt::format("--mode {} needs at least {} detunings, got {}", mode, min_rows, sets.size()));
  for (const auto& fs : sets) {
    if (fs.frames.empty()) throw AnalysisError(fmt::format("--mode {}: empty frame set", mode));
    if (fs.meta.n_pixels != sets.front().meta.n_pixels || fs.meta.pixel_pitch != sets.front().meta.pixel_pitch)
      throw AnalysisError("frame sets use different cameras");
  }
}

inline std::vector<double> pooled_mean(const FrameSet& fs) {
  std::vector<std::size_t> all(fs.frames.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return average_frames(fs, all);
}

}  // namespace detail

// --- analyze: line -----------------------------------------------------------

struct LinePoint {
  double detuning = 0.0;  ///< rad/s
  double theta = 0.0;     ///< rad
  double theta_error = 0.0;
  bool fitted = false;
  bool masked = false;
};

struct LineReport {
  std::vector<LinePoint> points;
  LineFit fit;  ///< theta [mrad] against f [MHz]
  double analytic_mrad_per_mhz = 0.0;
};

/// Peak angle per detuning from a Gaussian fit to the pooled frames, then a
/// robust line through (f, theta); parasitic-order points are masked as outliers.
inline LineReport analyze_line(const std::vector<FrameSet>& sets, const PhysicalConfig& cfg) {
  detail::require_frames(sets, 2, "line");
  const auto angles = pixel_angles_of(sets.front());
  LineReport r;
  std::vector<double> x, y;
  std::vector<std::size_t> idx;
  for (const auto& fs : sets) {
    LinePoint p;
    p.detuning = fs.meta.detuning;
    try {
      const auto fit = fit_gaussian(angles, detail::pooled_mean(fs));
      p.theta = fit.value.center;
      p.theta_error = fit.error.center;
      p.fitted = true;
      x.push_back(units::ordinary(p.detuning) / units::MHz);
      y.push_back(p.theta / units::mrad);
      idx.push_back(r.points.size());
    } catch (const AnalysisError&) {
      p.fitted = false;
    }
    r.points.push_back(p);
  }
  if (x.size() < 2) throw AnalysisError("fewer than two detunings gave a peak fit");
  r.fit = fit_line_robust(x, y);
  for (std::size_t k = 0; k < idx.size(); ++k) r.points[idx[k]].masked = r.fit.excluded[k];
  r.analytic_mrad_per_mhz = angular_dispersion_mrad_per_mhz(cfg);
  return r;
}

inline nlohmann::json to_json(const LineReport& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points)
    pts.push_back({{"detuning_hz", units::ordinary(p.detuning)},
                   {"theta_mrad", p.theta / units::mrad},
                   {"theta_error_mrad", p.theta_error / units::mrad},
                   {"fitted", p.fitted},
                   {"masked", p.masked}});
  return {{"mode", "line"},
          {"slope_mrad_per_mhz", r.fit.slope},
          {"slope_error_mrad_per_mhz", r.fit.slope_error},
          {"slope_relative_error", std::abs(r.fit.slope_error / r.fit.slope)},
          {"intercept_mrad", r.fit.intercept},
          {"intercept_error_mrad", r.fit.intercept_error},
          {"points_used", r.fit.n_used},
          {"analytic_slope_mrad_per_mhz", r.analytic_mrad_per_mhz},
          {"relative_deviation_from_analytic", r.fit.slope / r.analytic_mrad_per_mhz - 1.0},
          {"points", pts}};
}

// --- analyze: bootstrap ------------------------------------------------------

struct BootstrapRow {
  double detuning = 0.0;
  BootstrapResult result;
};

inline std::vector<BootstrapRow> analyze_bootstrap(const std::vector<FrameSet>& sets, const BootstrapOptions& base) {
  detail::require_frames(sets, 1, "bootstrap");
  const auto angles = pixel_angles_of(sets.front());
  std::vector<BootstrapRow> rows;
  for (std::size_t j = 0; j < sets.size(); ++j) {
    if (sets[j].frames.size() < base.frames_per_sample)
      throw AnalysisError(fmt::format("bootstrap needs at least {} frames per detuning, got {}", base.frames_per_sample,
                                      sets[j].frames.size()));
    BootstrapOptions opt = base;
    opt.seed = substream_seed(base.seed, 0xb007, j);
    rows.push_back({sets[j].meta.detuning, bootstrap_position(sets[j], angles, opt)});
  }
  return rows;
}

inline nlohmann::json to_json(const std::vector<BootstrapRow>& rows, const BootstrapOptions& opt) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& r : rows)
    table.push_back({{"detuning_hz", units::ordinary(r.detuning)},
                     {"mean_theta_mrad", r.result.mean / units::mrad},
                     {"std_theta_mrad", r.result.std_dev / units::mrad},
                     {"photons_per_sample", r.result.photons_per_sample}});
  return {{"mode", "bootstrap"},
          {"n_samples", opt.n_samples},
          {"frames_per_sample", opt.frames_per_sample},
          {"seed", opt.seed},
          {"rows", table}};
}

// --- analyze: fisher ---------------------------------------------------------

struct FisherRow {
  double detuning = 0.0;
  double fisher = 0.0;             ///< per photon, (rad/s)^-2
  double photons_total = 0.0;
  double cr_total = 0.0;           ///< bound for all photons at this detuning, rad/s
  double photons_per_sample = 0.0;
  double cr_sample = 0.0;          ///< bound for one bootstrap resample, rad/s
  double bootstrap_std = 0.0;      ///< bootstrap spread mapped to frequency, rad/s
};

struct FisherReport {
  std::vector<FisherRow> rows;
  double dispersion = 0.0;  ///< fitted d theta / d omega, rad per rad/s
};

/// Fisher information from the per-detuning histograms, compared with the
/// bootstrap spread of the fitted peak. Angles are mapped to frequency with the
/// fitted dispersion.
inline FisherReport analyze_fisher(const std::vector<FrameSet>& sets, const PhysicalConfig& cfg,
                                   const BootstrapOptions& boot) {
  detail::require_frames(sets, 3, "fisher");
  std::vector<double> detunings;
  std::vector<std::vector<std::uint64_t>> counts;
  for (const auto& fs : sets) {
    detunings.push_back(fs.meta.detuning);
    counts.push_back(histogram(fs).counts);
  }
  const auto family = EmpiricalPdfFamily::from_counts(detunings, counts);
  const auto line = analyze_line(sets, cfg);
  FisherReport r;
  r.dispersion = line.fit.slope * units::mrad / units::angular(units::MHz);
  if (!(std::abs(r.dispersion) > 0.0)) throw AnalysisError("zero angular dispersion: peaks do not move with frequency");
  const auto bs = analyze_bootstrap(sets, boot);
  for (std::size_t j = 1; j + 1 < sets.size(); ++j) {
    FisherRow row;
    row.detuning = detunings[j];
    row.fisher = fisher_information(family, j);
    row.photons_total = family.photons[j];
    row.photons_per_sample = bs[j].result.photons_per_sample;
    if (row.fisher > 0.0) {
      row.cr_total = cramer_rao_bound(row.fisher, row.photons_total);
      row.cr_sample = cramer_rao_bound(row.fisher, row.photons_per_sample);
    } else {
      row.cr_total = row.cr_sample = std::numeric_limits<double>::infinity();
    }
    row.bootstrap_std = bs[j].result.std_dev / std::abs(r.dispersion);
    r.rows.push_back(row);
  }
  return r;
}

inline nlohmann::json to_json(const FisherReport& r) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& x : r.rows)
    table.push_back({{"detuning_hz", units::ordinary(x.detuning)},
                     {"fisher_per_photon_s2", x.fisher},
                     {"photons_total", x.photons_total},
                     {"cr_std_total_hz", units::ordinary(x.cr_total)},
                     {"photons_per_sample", x.photons_per_sample},
                     {"cr_std_sample_hz", units::ordinary(x.cr_sample)},
                     {"bootstrap_std_hz", units::ordinary(x.bootstrap_std)},
                     {"bootstrap_over_cr", x.bootstrap_std / x.cr_sample}});
  return {{"mode", "fisher"}, {"dispersion_mrad_per_mhz", r.dispersion / units::mrad * units::angular(units::MHz)}, {"rows", table}};
}

// --- analyze: resolve --------------------------------------------------------

struct ResolveRow {
  double detuning = 0.0;
  TwoPeakResult result;
};

/// Two-peak classification of each detuning's histogram. The separation comes
/// from the frame metadata; `epsilon` must match it when both are present.
inline std::vector<ResolveRow> analyze_resolve(const std::vector<FrameSet>& sets, std::optional<double> epsilon,
                                               double smooth_pixels = 1.0) {
  detail::require_frames(sets, 1, "resolve");
  const auto angles = pixel_angles_of(sets.front());
  std::vector<ResolveRow> rows;
  for (const auto& fs : sets) {
    std::optional<double> eps = fs.meta.epsilon;
    if (eps && epsilon && std::abs(*eps - *epsilon) > 1e-6 * std::max(*eps, 1.0))
      throw AnalysisError(fmt::format("--epsilon 2pi x {:.4g} kHz does not match the recorded two-peak separation 2pi x {:.4g} kHz",
                                      units::ordinary(*epsilon) / units::kHz, units::ordinary(*eps) / units::kHz));
    if (!eps) eps = epsilon;
    if (!eps) throw AnalysisError("--mode resolve needs a two-peak input: scan with --epsilon or pass --epsilon");
    Histogram h = histogram(fs);
    std::vector<double> y(h.counts.begin(), h.counts.end());
    TwoPeakOptions opt;
    opt.smooth_bins = smooth_pixels;
    rows.push_back({fs.meta.detuning, resolve_two_peaks(angles, y, *eps, opt)});
  }
  return rows;
}

inline nlohmann::json to_json(const std::vector<ResolveRow>& rows) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& r : rows)
    table.push_back({{"detuning_hz", units::ordinary(r.detuning)},
                     {"epsilon_hz", units::ordinary(r.result.epsilon)},
                     {"resolvable", r.result.resolvable},
                     {"contrast", r.result.contrast},
                     {"threshold", r.result.threshold},
                     {"fitted", r.result.fitted},
                     {"fitted_separation_mrad", r.result.fitted_separation / units::mrad},
                     {"fitted_separation_error_mrad", r.result.fitted_separation_error / units::mrad}});
  bool all = !rows.empty();
  for (const auto& r : rows) all = all && r.result.resolvable;
  return {{"mode", "resolve"}, {"resolvable", all}, {"rows", table}};
}

}  // namespace gemspec
