#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "gemspec/core/errors.hpp"
#include "gemspec/core/physical_config.hpp"

namespace gemspec {

/// Regular (x, z) sampling centred on the cloud. Node nx/2 sits at x = 0 and
/// node nz/2 at z = 0.
struct Grid2D {
  std::size_t nx = 0;
  std::size_t nz = 0;
  double dx = 0.0;  ///< m per sample
  double dz = 0.0;

  double x(std::size_t i) const { return (static_cast<double>(i) - static_cast<double>(nx / 2)) * dx; }
  double z(std::size_t j) const { return (static_cast<double>(j) - static_cast<double>(nz / 2)) * dz; }
  double x_extent() const { return static_cast<double>(nx) * dx; }
  double z_extent() const { return static_cast<double>(nz) * dz; }
  double z_min() const { return z(0); }
  double z_max() const { return z(nz - 1); }
  std::size_t size() const { return nx * nz; }

  bool operator==(const Grid2D&) const = default;

  static Grid2D make(std::size_t nx, std::size_t nz, double x_extent, double z_extent) {
    if (!std::has_single_bit(nx) || !std::has_single_bit(nz) || nx < 8 || nz < 8)
      throw ConfigError(fmt::format("grid sizes must be powers of two >= 8, got {} x {}", nx, nz));
    if (!(x_extent > 0.0) || !(z_extent > 0.0)) throw ConfigError("grid extents must be positive");
    return Grid2D{nx, nz, x_extent / static_cast<double>(nx), z_extent / static_cast<double>(nz)};
  }
};

struct GridSettings {
  std::size_t nx = 1024;
  std::size_t nz = 1024;
  double x_extent_radii = 4.0;    ///< x extent in units of R
  double z_extent_lengths = 1.2;  ///< minimum z extent in units of L
};

/// Grid over x_extent_radii R by max(z_extent_lengths L, 2 min_z_half_extent).
inline Grid2D make_grid(const PhysicalConfig& cfg, const GridSettings& s, double min_z_half_extent = 0.0) {
  const double z_extent = std::max(s.z_extent_lengths * cfg.cloud_length, 2.0 * min_z_half_extent);
  return Grid2D::make(s.nx, s.nz, s.x_extent_radii * cfg.cloud_radius, z_extent);
}

/// Dense field over a grid; element (ix, iz) lives at iz * nx + ix.
template <class T>
class Field2D {
 public:
  Field2D() = default;
  explicit Field2D(const Grid2D& grid, T fill = T{}) : grid_(grid), data_(grid.size(), fill) {}

  const Grid2D& grid() const { return grid_; }
  T& operator()(std::size_t ix, std::size_t iz) { return data_[iz * grid_.nx + ix]; }
  const T& operator()(std::size_t ix, std::size_t iz) const { return data_[iz * grid_.nx + ix]; }

  std::span<T> row(std::size_t iz) { return {data_.data() + iz * grid_.nx, grid_.nx}; }
  std::span<const T> row(std::size_t iz) const { return {data_.data() + iz * grid_.nx, grid_.nx}; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

 private:
  Grid2D grid_{};
  std::vector<T> data_;
};

}  // namespace gemspec
