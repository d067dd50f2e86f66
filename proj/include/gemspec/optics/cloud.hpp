#pragma once

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "gemspec/core/errors.hpp"
#include "gemspec/core/physical_config.hpp"
#include "gemspec/optics/grid.hpp"

namespace gemspec {

/// Separable atomic density n(x, z) = n_perp(x) n_z(z), peak 1.
///
/// n_perp is Gaussian and n_z super-Gaussian; both drop to 1/e^2 at x = R and
/// z = L/2 respectively.
struct CloudDensity {
  Grid2D grid;
  double radius = 0.0;
  double length = 0.0;
  double order = 4.0;
  std::vector<double> transverse;    ///< n_perp at grid.x(i)
  std::vector<double> longitudinal;  ///< n_z at grid.z(j)

  double operator()(std::size_t ix, std::size_t iz) const { return transverse[ix] * longitudinal[iz]; }
};

inline double transverse_density(double x, double radius) { return std::exp(-2.0 * x * x / (radius * radius)); }

inline double longitudinal_density(double z, double length, double order) {
  return std::exp(-2.0 * std::pow(std::abs(2.0 * z / length), order));
}

inline CloudDensity build_cloud(const PhysicalConfig& cfg, const Grid2D& grid, double super_gaussian_order = 4.0) {
  if (!(super_gaussian_order >= 2.0)) throw ConfigError("super-Gaussian order must be >= 2");
  constexpr double slack = 1.0 - 1e-9;
  if (grid.x_extent() < 4.0 * cfg.cloud_radius * slack || grid.z_extent() < 1.2 * cfg.cloud_length * slack) {
    throw ExtentError(fmt::format("grid {:.4g} mm x {:.4g} mm does not cover 4R x 1.2L = {:.4g} mm x {:.4g} mm",
                                  grid.x_extent() / units::mm, grid.z_extent() / units::mm,
                                  4.0 * cfg.cloud_radius / units::mm, 1.2 * cfg.cloud_length / units::mm));
  }
  CloudDensity c{grid, cfg.cloud_radius, cfg.cloud_length, super_gaussian_order, {}, {}};
  c.transverse.resize(grid.nx);
  c.longitudinal.resize(grid.nz);
  for (std::size_t i = 0; i < grid.nx; ++i) c.transverse[i] = transverse_density(grid.x(i), cfg.cloud_radius);
  for (std::size_t j = 0; j < grid.nz; ++j)
    c.longitudinal[j] = longitudinal_density(grid.z(j), cfg.cloud_length, super_gaussian_order);
  return c;
}

}  // namespace gemspec
