#pragma once

// Fisher information of frequency estimation from an empirical pixel distribution.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "gemspec/core/errors.hpp"

namespace gemspec {

/// Family of pixel distributions P(pixel | omega_j) on a uniform detuning grid.
struct EmpiricalPdfFamily {
  std::vector<double> detunings;         ///< rad/s, uniformly spaced
  std::vector<std::vector<double>> pdf;  ///< one normalised row per detuning
  std::vector<double> photons;           ///< detected photons behind each row

  double step() const { return detunings.size() > 1 ? detunings[1] - detunings[0] : 0.0; }

  void validate() const {
    if (detunings.size() < 3) throw AnalysisError("Fisher information needs at least three detunings");
    if (pdf.size() != detunings.size() || photons.size() != detunings.size())
      throw AnalysisError("pdf family shape does not match the detuning axis");
    const double h = step();
    if (!(h > 0.0)) throw AnalysisError("detunings must increase");
    for (std::size_t j = 1; j < detunings.size(); ++j)
      if (std::abs(detunings[j] - detunings[j - 1] - h) > 1e-6 * h)
        throw AnalysisError("detuning grid is not uniform");
    for (const auto& row : pdf)
      if (row.size() != pdf.front().size()) throw AnalysisError("pdf rows differ in length");
  }

  /// Rows from raw counts, each normalised to unit sum.
  static EmpiricalPdfFamily from_counts(std::span<const double> detunings,
                                        const std::vector<std::vector<std::uint64_t>>& counts) {
    EmpiricalPdfFamily f;
    f.detunings.assign(detunings.begin(), detunings.end());
    for (const auto& c : counts) {
      double total = 0.0;
      for (auto v : c) total += static_cast<double>(v);
      if (!(total > 0.0)) throw AnalysisError("histogram with zero counts");
      std::vector<double> row(c.size());
      for (std::size_t i = 0; i < c.size(); ++i) row[i] = static_cast<double>(c[i]) / total;
      f.pdf.push_back(std::move(row));
      f.photons.push_back(total);
    }
    f.validate();
    return f;
  }
};

/// F(omega_j) = sum_i (dP_i/domega)^2 / P_i with a central difference in omega.
/// Pixels with P_i below floor * max_i P_i are left out, so empty bins do not
/// blow up the sum. Endpoints have no central difference and throw.
inline double fisher_information(const EmpiricalPdfFamily& f, std::size_t j, double floor = 1e-6) {
  f.validate();
  if (j == 0 || j + 1 >= f.detunings.size())
    throw AnalysisError(fmt::format("no central difference at detuning index {}", j));
  const auto& lo = f.pdf[j - 1];
  const auto& mid = f.pdf[j];
  const auto& hi = f.pdf[j + 1];
  const double h2 = 2.0 * f.step();
  const double pmax = *std::max_element(mid.begin(), mid.end());
  if (!(pmax > 0.0)) throw AnalysisError(fmt::format("pdf at detuning index {} is zero everywhere", j));
  const double p_floor = floor * pmax;
  double sum = 0.0;
  for (std::size_t i = 0; i < mid.size(); ++i) {
    if (mid[i] < p_floor) continue;
    const double dp = (hi[i] - lo[i]) / h2;
    sum += dp * dp / mid[i];
  }
  return sum;
}

/// Single-parameter bound on the standard deviation of an unbiased estimator
/// from n independent photons.
inline double cramer_rao_bound(double fisher, double n_photons) {
  if (!(fisher > 0.0)) throw AnalysisError("Fisher information must be > 0");
  if (!(n_photons > 0.0)) throw AnalysisError("photon number must be > 0");
  return 1.0 / std::sqrt(n_photons * fisher);
}

struct FisherPoint {
  double detuning = 0.0;  ///< rad/s
  double fisher = 0.0;    ///< (rad/s)^-2 per photon
  double photons = 0.0;
  double cr_std = 0.0;    ///< rad/s
};

/// Fisher information and bound at every interior detuning. A positive
/// `photons_per_estimate` replaces the per-row photon count in the bound.
inline std::vector<FisherPoint> fisher_curve(const EmpiricalPdfFamily& f, double photons_per_estimate = 0.0,
                                             double floor = 1e-6) {
  f.validate();
  std::vector<FisherPoint> out;
  for (std::size_t j = 1; j + 1 < f.detunings.size(); ++j) {
    FisherPoint p;
    p.detuning = f.detunings[j];
    p.fisher = fisher_information(f, j, floor);
    p.photons = photons_per_estimate > 0.0 ? photons_per_estimate : f.photons[j];
    // a row with no information has no finite bound
    p.cr_std = p.fisher > 0.0 ? cramer_rao_bound(p.fisher, p.photons) : std::numeric_limits<double>::infinity();
    out.push_back(p);
  }
  return out;
}

}  // namespace gemspec
