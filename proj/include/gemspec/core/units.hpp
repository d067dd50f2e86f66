#pragma once

// Quantity strings with explicit units.
//
// Internally everything is SI with angular frequencies in rad/s. A quantity
// string looks like "795 nm", "2pi*1.35 MHz/cm" or "8.48e8 rad/s/m". The
// "2pi*" prefix marks a value quoted as 2pi x (ordinary frequency); it is the
// only place a factor of 2pi is ever introduced. Ordinary Hz is never silently
// promoted to rad/s.

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "gemspec/core/errors.hpp"

namespace gemspec {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

namespace units {

inline constexpr double nm = 1e-9;
inline constexpr double um = 1e-6;
inline constexpr double mm = 1e-3;
inline constexpr double cm = 1e-2;
inline constexpr double us = 1e-6;
inline constexpr double kHz = 1e3;
inline constexpr double MHz = 1e6;
inline constexpr double THz = 1e12;
inline constexpr double mrad = 1e-3;

/// Angular frequency from an ordinary frequency in Hz.
constexpr double angular(double hz) { return kTwoPi * hz; }
/// Ordinary frequency in Hz from an angular frequency.
constexpr double ordinary(double rad_per_s) { return rad_per_s / kTwoPi; }

}  // namespace units

/// What a configuration field measures; drives unit validation.
enum class QuantityKind {
  length,            // m
  time,              // s
  angular_rate,      // rad/s
  frequency,         // Hz (ordinary)
  angular_gradient,  // rad s^-1 m^-1
  wavenumber,        // rad/m
  angle,             // rad
  pixel_density,     // px/m
  pixel_count,       // px
  dimensionless,
};

inline std::string_view to_string(QuantityKind kind);

namespace detail {

// Exponents of length, time, angle (rad), cycles and pixels.
struct Dims {
  std::array<int, 5> e{};
  constexpr bool operator==(const Dims&) const = default;
};

constexpr Dims dims(int length, int time, int angle = 0, int cycles = 0, int pixels = 0) {
  return Dims{{length, time, angle, cycles, pixels}};
}

struct UnitAtom {
  std::string_view name;
  double scale;
  Dims d;
};

inline constexpr UnitAtom kAtoms[] = {
    {"m", 1.0, dims(1, 0)},       {"cm", 1e-2, dims(1, 0)},     {"mm", 1e-3, dims(1, 0)},
    {"um", 1e-6, dims(1, 0)},     {"µm", 1e-6, dims(1, 0)},     {"nm", 1e-9, dims(1, 0)},
    {"s", 1.0, dims(0, 1)},       {"ms", 1e-3, dims(0, 1)},     {"us", 1e-6, dims(0, 1)},
    {"µs", 1e-6, dims(0, 1)},     {"ns", 1e-9, dims(0, 1)},     {"Hz", 1.0, dims(0, -1, 0, 1)},
    {"kHz", 1e3, dims(0, -1, 0, 1)}, {"MHz", 1e6, dims(0, -1, 0, 1)},
    {"GHz", 1e9, dims(0, -1, 0, 1)}, {"THz", 1e12, dims(0, -1, 0, 1)},
    {"rad", 1.0, dims(0, 0, 1)},  {"mrad", 1e-3, dims(0, 0, 1)}, {"urad", 1e-6, dims(0, 0, 1)},
    {"px", 1.0, dims(0, 0, 0, 0, 1)}, {"%", 1e-2, dims(0, 0)},
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

struct ParsedUnit {
  double scale = 1.0;
  Dims d{};
};

// Parses "MHz/cm", "mm^-1", "rad/s/m", "px/mm", "%". Empty string is dimensionless.
inline ParsedUnit parse_unit(std::string_view text, std::string_view whole) {
  ParsedUnit out;
  text = trim(text);
  if (text.empty()) return out;
  int sign = +1;
  std::size_t pos = 0;
  bool first = true;
  while (pos <= text.size()) {
    std::size_t next = text.find_first_of("/*", pos);
    std::string_view token = trim(text.substr(pos, next == std::string_view::npos ? next : next - pos));
    if (token.empty()) {
      // leading '/' as in "/mm"
      if (!(first && next == pos)) throw ConfigError("malformed unit in '" + std::string(whole) + "'");
    } else if (token != "1") {
      int exponent = 1;
      if (auto caret = token.find('^'); caret != std::string_view::npos) {
        std::string_view ex = token.substr(caret + 1);
        auto [p, ec] = std::from_chars(ex.data(), ex.data() + ex.size(), exponent);
        if (ec != std::errc{} || p != ex.data() + ex.size())
          throw ConfigError("bad unit exponent in '" + std::string(whole) + "'");
        token = token.substr(0, caret);
      }
      const UnitAtom* atom = nullptr;
      for (const auto& a : kAtoms)
        if (a.name == token) atom = &a;
      if (atom == nullptr)
        throw ConfigError("unknown unit '" + std::string(token) + "' in '" + std::string(whole) + "'");
      const int power = sign * exponent;
      out.scale *= std::pow(atom->scale, power);
      for (std::size_t i = 0; i < out.d.e.size(); ++i) out.d.e[i] += power * atom->d.e[i];
    }
    if (next == std::string_view::npos) break;
    sign = text[next] == '/' ? -1 : +1;
    pos = next + 1;
    first = false;
  }
  return out;
}

}  // namespace detail

/// Parses a quantity string into SI (angular frequencies in rad/s) and checks it
/// against the expected kind. Throws ConfigError on unsuffixed numbers for
/// dimensioned kinds, unknown units, dimension mismatch, or an ambiguous 2pi.
inline double parse_quantity(std::string_view text, QuantityKind kind) {
  using detail::dims;
  const std::string whole(text);
  std::string_view s = detail::trim(text);

  bool two_pi = false;
  for (std::string_view prefix : {"2pi*", "2pi ", "2*pi*", "2π×", "2π*", "2pi x "}) {
    if (s.starts_with(prefix)) {
      two_pi = true;
      s = detail::trim(s.substr(prefix.size()));
      break;
    }
  }

  double number = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), number);
  if (ec != std::errc{}) throw ConfigError("expected a number in quantity '" + whole + "'");
  std::string_view unit_text = detail::trim(std::string_view(end, s.data() + s.size() - end));
  if (unit_text.empty() && kind != QuantityKind::dimensionless)
    throw ConfigError("quantity '" + whole + "' has no unit; expected " + std::string(to_string(kind)));

  auto unit = detail::parse_unit(unit_text, whole);
  double value = number * unit.scale;
  auto d = unit.d;
  if (two_pi) {
    // 2pi x (cycles or bare inverse quantity) -> radians
    if (d.e[3] == 1) d.e[3] = 0;
    else if (d.e[3] != 0) throw ConfigError("cannot apply 2pi to '" + whole + "'");
    if (d.e[2] != 0) throw ConfigError("2pi prefix on a quantity already in rad: '" + whole + "'");
    d.e[2] = 1;
    value *= kTwoPi;
  }

  auto mismatch = [&]() {
    return ConfigError("quantity '" + whole + "' does not have the dimension of " +
                       std::string(to_string(kind)));
  };

  switch (kind) {
    case QuantityKind::length:
      if (d != dims(1, 0)) throw mismatch();
      return value;
    case QuantityKind::time:
      if (d != dims(0, 1)) throw mismatch();
      return value;
    case QuantityKind::angular_rate:
      if (d == dims(0, -1, 0, 1))
        throw ConfigError("ambiguous angular frequency '" + whole + "': write 2pi*<f> Hz or rad/s");
      if (d != dims(0, -1, 1)) throw mismatch();
      return value;
    case QuantityKind::frequency:
      if (d == dims(0, -1, 0, 1)) return value;
      if (d == dims(0, -1, 1)) return value / kTwoPi;
      throw mismatch();
    case QuantityKind::angular_gradient:
      if (d == dims(-1, -1, 0, 1))
        throw ConfigError("ambiguous gradient '" + whole + "': write 2pi*<f> Hz/m or rad/s/m");
      if (d != dims(-1, -1, 1)) throw mismatch();
      return value;
    case QuantityKind::wavenumber:
      if (d == dims(-1, 0))
        throw ConfigError("ambiguous wavenumber '" + whole + "': write 2pi*<k> mm^-1 or rad/m");
      if (d != dims(-1, 0, 1)) throw mismatch();
      return value;
    case QuantityKind::angle:
      if (d != dims(0, 0, 1)) throw mismatch();
      return value;
    case QuantityKind::pixel_density:
      if (d != dims(-1, 0, 0, 0, 1)) throw mismatch();
      return value;
    case QuantityKind::pixel_count:
      if (d != dims(0, 0, 0, 0, 1)) throw mismatch();
      return value;
    case QuantityKind::dimensionless:
      if (d != dims(0, 0)) throw mismatch();
      return value;
  }
  throw mismatch();
}

inline std::string_view to_string(QuantityKind kind) {
  switch (kind) {
    case QuantityKind::length: return "length [m]";
    case QuantityKind::time: return "time [s]";
    case QuantityKind::angular_rate: return "angular frequency [rad/s]";
    case QuantityKind::frequency: return "frequency [Hz]";
    case QuantityKind::angular_gradient: return "frequency gradient [rad/s/m]";
    case QuantityKind::wavenumber: return "wavenumber [rad/m]";
    case QuantityKind::angle: return "angle [rad]";
    case QuantityKind::pixel_density: return "pixel density [px/m]";
    case QuantityKind::pixel_count: return "pixel count [px]";
    case QuantityKind::dimensionless: return "dimensionless";
  }
  return "?";
}

}  // namespace gemspec
