#pragma once

// Phase masks from grayscale images of the ac-Stark beam.
//
// An image comes with a JSON sidecar:
//   { "ppcm": "104 px/mm", "i_2pi": 200, "z_axis": "columns" }
// ppcm is the SLM pixel density on the cloud, i_2pi the gray level that
// produces a 2pi phase and z_axis the image direction along the cloud axis.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>
#include <fmt/format.h>
#include <json.hpp>

#include "gemspec/core/errors.hpp"
#include "gemspec/core/units.hpp"
#include "gemspec/optics/grid.hpp"
#include "gemspec/optics/mask.hpp"

namespace gemspec {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> pixels;  ///< row-major raw gray levels

  std::uint16_t operator()(std::size_t col, std::size_t row) const { return pixels[row * width + col]; }
};

struct MaskImageSidecar {
  double pixels_per_length = 0.0;  ///< px/m
  double i_2pi = 0.0;              ///< gray level of a 2pi phase
  bool z_along_columns = true;
};

/// Reads an 8- or 16-bit grayscale PNG without gamma conversion.
inline GrayImage read_gray_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str()))
    throw ConfigError(fmt::format("cannot read PNG '{}': {}", path.string(), img.message));
  const bool sixteen = (img.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  if (img.format & PNG_FORMAT_FLAG_COLOR) {
    png_image_free(&img);
    throw ConfigError(fmt::format("mask image '{}' must be grayscale", path.string()));
  }
  GrayImage out;
  out.width = img.width;
  out.height = img.height;
  out.bit_depth = sixteen ? 16 : 8;
  img.format = sixteen ? PNG_FORMAT_LINEAR_Y : PNG_FORMAT_GRAY;
  if (sixteen) {
    std::vector<png_uint_16> buf(PNG_IMAGE_SIZE(img) / sizeof(png_uint_16));
    if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr))
      throw ConfigError(fmt::format("cannot decode PNG '{}': {}", path.string(), img.message));
    out.pixels.assign(buf.begin(), buf.end());
  } else {
    std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr))
      throw ConfigError(fmt::format("cannot decode PNG '{}': {}", path.string(), img.message));
    out.pixels.assign(buf.begin(), buf.end());
  }
  return out;
}

inline void write_gray_png(const std::filesystem::path& path, const GrayImage& image) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  bool ok = false;
  if (image.bit_depth == 16) {
    img.format = PNG_FORMAT_LINEAR_Y;
    ok = png_image_write_to_file(&img, path.string().c_str(), 0, image.pixels.data(), 0, nullptr);
  } else {
    img.format = PNG_FORMAT_GRAY;
    std::vector<png_byte> buf(image.pixels.size());
    for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = static_cast<png_byte>(std::min<std::uint16_t>(image.pixels[k], 255));
    ok = png_image_write_to_file(&img, path.string().c_str(), 0, buf.data(), 0, nullptr);
  }
  if (!ok) throw ConfigError(fmt::format("cannot write PNG '{}': {}", path.string(), img.message));
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& image) {
  auto p = image;
  return p.replace_extension(".json");
}

inline MaskImageSidecar read_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("missing mask sidecar '{}'", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("bad mask sidecar '{}': {}", path.string(), e.what()));
  }
  MaskImageSidecar s;
  if (!j.contains("ppcm") || !j["ppcm"].is_string())
    throw ConfigError("mask sidecar needs \"ppcm\" with a unit, e.g. \"104 px/mm\"");
  s.pixels_per_length = parse_quantity(j["ppcm"].get<std::string>(), QuantityKind::pixel_density);
  if (!j.contains("i_2pi") || !j["i_2pi"].is_number()) throw ConfigError("mask sidecar needs a numeric \"i_2pi\"");
  s.i_2pi = j["i_2pi"].get<double>();
  if (!(s.i_2pi > 0.0) || !(s.pixels_per_length > 0.0)) throw ConfigError("mask sidecar values must be > 0");
  const std::string axis = j.value("z_axis", std::string("columns"));
  if (axis != "columns" && axis != "rows") throw ConfigError("mask sidecar z_axis must be \"columns\" or \"rows\"");
  s.z_along_columns = axis == "columns";
  return s;
}

/// Samples the image at the grid nodes (bilinear, image centre on the cloud
/// centre, zero outside) and converts gray level to phase 2pi I / i_2pi.
inline PhaseMask mask_from_image(const GrayImage& image, const MaskImageSidecar& meta, const Grid2D& grid) {
  if (image.width < 2 || image.height < 2) throw ConfigError("mask image is smaller than 2 x 2 pixels");
  PhaseMask m{Field2D<double>(grid), MaskProvenance::external_image, {}, {}};
  const std::size_t nz_img = meta.z_along_columns ? image.width : image.height;
  const std::size_t nx_img = meta.z_along_columns ? image.height : image.width;
  auto level = [&](std::size_t ix, std::size_t iz) {
    return static_cast<double>(meta.z_along_columns ? image(iz, ix) : image(ix, iz));
  };
  auto sample = [&](double u, double v) {  // u along x, v along z, in image pixels
    if (u < 0.0 || v < 0.0 || u > static_cast<double>(nx_img - 1) || v > static_cast<double>(nz_img - 1)) return 0.0;
    const auto i0 = std::min(static_cast<std::size_t>(u), nx_img - 2);
    const auto j0 = std::min(static_cast<std::size_t>(v), nz_img - 2);
    const double fu = u - static_cast<double>(i0), fv = v - static_cast<double>(j0);
    return (1 - fu) * (1 - fv) * level(i0, j0) + fu * (1 - fv) * level(i0 + 1, j0) + (1 - fu) * fv * level(i0, j0 + 1) +
           fu * fv * level(i0 + 1, j0 + 1);
  };
  const double cx = 0.5 * static_cast<double>(nx_img - 1), cz = 0.5 * static_cast<double>(nz_img - 1);
  std::size_t outside = 0;
  for (std::size_t j = 0; j < grid.nz; ++j) {
    const double v = grid.z(j) * meta.pixels_per_length + cz;
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const double u = grid.x(i) * meta.pixels_per_length + cx;
      if (u < 0.0 || v < 0.0 || u > static_cast<double>(nx_img - 1) || v > static_cast<double>(nz_img - 1)) ++outside;
      m.phase(i, j) = kTwoPi * sample(u, v) / meta.i_2pi;
    }
  }
  if (outside > 0)
    m.warnings.push_back(fmt::format("{} of {} grid nodes lie outside the mask image and get zero phase", outside, grid.size()));
  return m;
}

inline PhaseMask load_mask_image(const std::filesystem::path& png, const Grid2D& grid) {
  return mask_from_image(read_gray_png(png), read_sidecar(sidecar_path(png)), grid);
}

/// Renders a mask as the wrapped intensity pattern I = i_2pi (phi mod 2pi) / 2pi,
/// sampled on an image at the given pixel density, and writes PNG plus sidecar.
inline void save_mask_image(const PhaseMask& mask, const std::filesystem::path& png, double pixels_per_length,
                            std::size_t width, std::size_t height, int bit_depth = 16) {
  const Grid2D& g = mask.grid();
  const double i_2pi = bit_depth == 16 ? 65535.0 : 255.0;
  GrayImage img{width, height, bit_depth, std::vector<std::uint16_t>(width * height, 0)};
  for (std::size_t r = 0; r < height; ++r) {
    const double x = (static_cast<double>(r) - 0.5 * static_cast<double>(height - 1)) / pixels_per_length;
    const double fi = x / g.dx + static_cast<double>(g.nx / 2);
    for (std::size_t c = 0; c < width; ++c) {
      const double z = (static_cast<double>(c) - 0.5 * static_cast<double>(width - 1)) / pixels_per_length;
      const double fj = z / g.dz + static_cast<double>(g.nz / 2);
      const auto i = static_cast<long>(std::lround(fi)), j = static_cast<long>(std::lround(fj));
      if (i < 0 || j < 0 || i >= static_cast<long>(g.nx) || j >= static_cast<long>(g.nz)) continue;
      const double phi = detail::wrap_phase(mask.phase(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
      img.pixels[r * width + c] = static_cast<std::uint16_t>(std::min(i_2pi, std::round(i_2pi * phi / kTwoPi)));
    }
  }
  write_gray_png(png, img);
  nlohmann::json side = {{"ppcm", fmt::format("{} px/mm", pixels_per_length * units::mm)},
                         {"i_2pi", i_2pi},
                         {"z_axis", "columns"}};
  std::ofstream(sidecar_path(png)) << side.dump(2) << '\n';
}

}  // namespace gemspec
