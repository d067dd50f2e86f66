#include <gtest/gtest.h>

#include "gemspec/core/units.hpp"

using namespace gemspec;
using K = QuantityKind;

TEST(Units, ParsesAngularGradientWithTwoPi) {
  EXPECT_NEAR(parse_quantity("2pi*1.35 MHz/cm", K::angular_gradient), kTwoPi * 1.35e6 / 1e-2, 1e-3);
  EXPECT_NEAR(parse_quantity("2π×1.35 MHz/cm", K::angular_gradient), kTwoPi * 1.35e8, 1e-3);
  EXPECT_NEAR(parse_quantity("848230016.4692441 rad/s/m", K::angular_gradient), 848230016.4692441, 0.0);
}

TEST(Units, ParsesWavenumberForms) {
  EXPECT_NEAR(parse_quantity("2pi*20 mm^-1", K::wavenumber), kTwoPi * 2e4, 1e-9);
  EXPECT_NEAR(parse_quantity("2pi*20.4/mm", K::wavenumber), kTwoPi * 2.04e4, 1e-9);
  EXPECT_NEAR(parse_quantity("125663.7 rad/m", K::wavenumber), 125663.7, 1e-9);
}

TEST(Units, LengthsTimesAndAngles) {
  EXPECT_DOUBLE_EQ(parse_quantity("9 mm", K::length), 9e-3);
  EXPECT_DOUBLE_EQ(parse_quantity("208 um", K::length), 208e-6);
  EXPECT_DOUBLE_EQ(parse_quantity("208 µm", K::length), 208e-6);
  EXPECT_DOUBLE_EQ(parse_quantity("795nm", K::length), 795e-9);
  EXPECT_DOUBLE_EQ(parse_quantity("5.64 us", K::time), 5.64e-6);
  EXPECT_DOUBLE_EQ(parse_quantity("0.27 mrad", K::angle), 0.27e-3);
  EXPECT_DOUBLE_EQ(parse_quantity("104 px/mm", K::pixel_density), 104e3);
  EXPECT_DOUBLE_EQ(parse_quantity("20 %", K::dimensionless), 0.2);
}

TEST(Units, FrequencyKindAcceptsHzAndRadPerSecond) {
  EXPECT_DOUBLE_EQ(parse_quantity("9.1 kHz", K::frequency), 9100.0);
  EXPECT_NEAR(parse_quantity("2pi*9.1 kHz", K::frequency), 9100.0, 1e-9);
  EXPECT_NEAR(parse_quantity("6283.185307179586 rad/s", K::frequency), 1000.0, 1e-9);
}

TEST(Units, RejectsUnsuffixedNumbers) {
  EXPECT_THROW(parse_quantity("9", K::length), ConfigError);
  EXPECT_THROW(parse_quantity("1.35", K::angular_gradient), ConfigError);
  EXPECT_NO_THROW(parse_quantity("60", K::dimensionless));
}

TEST(Units, RejectsAmbiguousAngularQuantities) {
  EXPECT_THROW(parse_quantity("1.35 MHz/cm", K::angular_gradient), ConfigError);
  EXPECT_THROW(parse_quantity("20 mm^-1", K::wavenumber), ConfigError);
  EXPECT_THROW(parse_quantity("450 kHz", K::angular_rate), ConfigError);
}

TEST(Units, RejectsDimensionMismatchAndJunk) {
  EXPECT_THROW(parse_quantity("9 s", K::length), ConfigError);
  EXPECT_THROW(parse_quantity("9 furlong", K::length), ConfigError);
  EXPECT_THROW(parse_quantity("mm", K::length), ConfigError);
  EXPECT_THROW(parse_quantity("2pi*1 rad", K::angle), ConfigError);
  EXPECT_THROW(parse_quantity("1 mm^x", K::length), ConfigError);
}

TEST(Units, AngularOrdinaryRoundTrip) {
  for (double f : {0.0, 1.0, 9.1e3, 1.215e6, 3.77e14}) EXPECT_DOUBLE_EQ(units::ordinary(units::angular(f)), f);
}
