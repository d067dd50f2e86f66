#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <unistd.h>

#include "gemspec/io/config.hpp"
#include "gemspec/io/serialize.hpp"
#include "gemspec/optics/mask_image.hpp"

using namespace gemspec;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            (std::string("gemspec_io_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

// --- configuration -----------------------------------------------------------

TEST(Config, DefaultsMatchTheBundledProfile) {
  const Settings s = settings_from_json(nlohmann::json::object());
  const auto d = paper_defaults();
  EXPECT_EQ(s.physics.beta, d.beta);
  EXPECT_EQ(s.physics.kappa, d.kappa);
  EXPECT_EQ(s.camera.n_pixels, 400u);
  EXPECT_EQ(s.scan.steps, 40u);
  EXPECT_NEAR(s.mask.blur_or_default(s.physics), 1.0 / (104.0 / units::mm), 1e-15);
}

TEST(Config, ParsesUnitsAndOverrides) {
  const auto j = nlohmann::json::parse(R"({
    "profile": "paper_defaults",
    "physics": {"kappa": "2pi*20.4 mm^-1", "beta": "2pi*1.35 MHz/cm", "cloud_radius": "208 um",
                "coupling_decoherence": "9.1 kHz", "absorption_efficiency": null, "camera_qe": "20 %"},
    "camera": {"pixel_pitch": "0.27 mrad", "n_pixels": 200, "seed": 9},
    "grid": {"nx": 512, "nz": 256, "max_angle": "40 mrad"},
    "mask": {"blur_sigma": "5 um", "contrast": 0.9},
    "scan": {"span": "1.2 MHz", "steps": 30}
  })");
  const auto s = settings_from_json(j);
  EXPECT_NEAR(s.physics.kappa, kTwoPi * 20.4e3, 1e-9);
  EXPECT_FALSE(s.physics.absorption_efficiency_override);
  EXPECT_DOUBLE_EQ(s.physics.camera_qe, 0.2);
  EXPECT_EQ(s.camera.n_pixels, 200u);
  EXPECT_EQ(s.camera.seed, 9u);
  EXPECT_EQ(s.grid.nx, 512u);
  EXPECT_DOUBLE_EQ(s.max_angle, 0.04);
  EXPECT_DOUBLE_EQ(*s.mask.blur_sigma, 5e-6);
  EXPECT_NEAR(s.scan.span, units::angular(1.2e6), 1e-6);
  EXPECT_EQ(s.scan.steps, 30u);
}

TEST(Config, WavelengthChangesCarrier) {
  const auto s = settings_from_json(nlohmann::json::parse(R"({"physics": {"wavelength": "780 nm"}})"));
  EXPECT_NEAR(s.physics.carrier, carrier_from_wavelength(780e-9), 1.0);
}

TEST(Config, RejectsBadInput) {
  auto bad = [](const char* text) { return settings_from_json(nlohmann::json::parse(text)); };
  EXPECT_THROW(bad(R"({"physics": {"kappa": "20 mm^-1"}})"), ConfigError);      // ambiguous 2pi
  EXPECT_THROW(bad(R"({"physics": {"cloud_length": 9}})"), ConfigError);        // unsuffixed
  EXPECT_THROW(bad(R"({"physics": {"cloud_length": "9 s"}})"), ConfigError);    // wrong dimension
  EXPECT_THROW(bad(R"({"physics": {"colour": "red"}})"), ConfigError);          // unknown key
  EXPECT_THROW(bad(R"({"extra": {}})"), ConfigError);
  EXPECT_THROW(bad(R"({"profile": "other"})"), ConfigError);
  EXPECT_THROW(bad(R"({"grid": {"nx": 1000}})"), ConfigError);                  // not a power of two
  EXPECT_THROW(bad(R"({"grid": {"x_extent_radii": 2}})"), ConfigError);
  EXPECT_THROW(bad(R"({"camera": {"mean_signal": -1}})"), ConfigError);
  EXPECT_THROW(bad(R"({"scan": {"steps": 0}})"), ConfigError);
  EXPECT_THROW(bad(R"({"physics": {"camera_qe": 1.5}})"), ConfigError);
  EXPECT_THROW(bad(R"([1, 2])"), ConfigError);
}

TEST(Config, RoundTripIsExact) {
  Settings s;
  s.physics.kappa = kTwoPi * 20.4 / units::mm;
  s.mask.blur_sigma = 7.5e-6;
  s.camera.seed = 123456789;
  const auto j = settings_to_json(s);
  const auto back = settings_from_json(j);
  EXPECT_EQ(settings_to_json(back), j);
  EXPECT_EQ(back.physics.kappa, s.physics.kappa);
  EXPECT_EQ(back.physics.carrier, s.physics.carrier);
  EXPECT_EQ(back.scan.span, s.scan.span);
}

TEST(Config, ResolutionOrder) {
  TempDir dir;
  const auto a = dir.path() / "a.json", b = dir.path() / "b.json";
  write_text(a, R"({"scan": {"steps": 11}})");
  write_text(b, R"({"scan": {"steps": 22}})");
  ::setenv(kConfigEnvVar, b.c_str(), 1);
  EXPECT_EQ(resolve_settings(a).scan.steps, 11u);
  EXPECT_EQ(resolve_settings(std::nullopt).scan.steps, 22u);
  ::unsetenv(kConfigEnvVar);
  EXPECT_EQ(resolve_settings(std::nullopt).scan.steps, 40u);
  EXPECT_THROW(load_settings(dir.path() / "missing.json"), ConfigError);
  write_text(a, "{ not json");
  EXPECT_THROW(load_settings(a), ConfigError);
}

// --- angular spectrum --------------------------------------------------------

namespace {

AngularSpectrum small_spectrum() {
  AngularSpectrum s;
  s.detunings = {units::angular(-40e3), 0.0, units::angular(40e3)};
  s.angles = {-0.5e-3, 0.0, 0.5e-3, 1.0e-3};
  for (int k = 0; k < 12; ++k) s.intensity.push_back(0.1 * k + 1.0 / 3.0);
  s.angular_resolution = 0.5e-3;
  s.mask = "wrapped+blurred";
  s.spectrum = PulseSpectrum::double_gaussian(1.0 / 5.64e-6, units::angular(300e3));
  s.kappa = kTwoPi * 20.4e3;
  return s;
}

}  // namespace

TEST(Spectrum, JsonRoundTrip) {
  TempDir dir;
  const auto s = small_spectrum();
  write_spectrum_json(s, dir.path() / "sub" / "spectrum.json");
  const auto back = read_spectrum_json(dir.path() / "sub" / "spectrum.json");
  EXPECT_EQ(back.detunings, s.detunings);
  EXPECT_EQ(back.angles, s.angles);
  EXPECT_EQ(back.intensity, s.intensity);
  EXPECT_EQ(back.mask, s.mask);
  EXPECT_EQ(back.kappa, s.kappa);
  EXPECT_TRUE(back.spectrum.two_peak);
  EXPECT_FALSE(back.spectrum.relative_phase);
  EXPECT_EQ(back.spectrum.separation, s.spectrum.separation);
}

TEST(Spectrum, RejectsWrongDocuments) {
  TempDir dir;
  auto j = spectrum_to_json(small_spectrum());
  j["shape"] = {2, 4};
  EXPECT_THROW(spectrum_from_json(j), ConfigError);
  j = spectrum_to_json(small_spectrum());
  j["format"] = "something/else";
  EXPECT_THROW(spectrum_from_json(j), ConfigError);
  j = spectrum_to_json(small_spectrum());
  j.erase("angles");
  EXPECT_THROW(spectrum_from_json(j), ConfigError);
  write_text(dir.path() / "x.json", "[");
  EXPECT_THROW(read_spectrum_json(dir.path() / "x.json"), ConfigError);
}

TEST(Spectrum, CsvLayout) {
  TempDir dir;
  write_spectrum_csv(small_spectrum(), dir.path() / "s.csv");
  std::ifstream in(dir.path() / "s.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  ASSERT_EQ(header.substr(0, 12), "detuning_hz,");
  std::vector<double> cols;
  for (std::size_t pos = 11; pos != std::string::npos; pos = header.find(',', pos + 1))
    cols.push_back(std::stod(header.substr(pos + 1)));
  ASSERT_EQ(cols.size(), 4u);
  EXPECT_NEAR(cols[0], -0.5, 1e-12);
  EXPECT_NEAR(cols[3], 1.0, 1e-12);
  EXPECT_NEAR(std::stod(row.substr(0, row.find(','))), -40000.0, 1e-6);
  int lines = 1;
  while (std::getline(in, row)) ++lines;
  EXPECT_EQ(lines, 3);
}

// --- frames ------------------------------------------------------------------

TEST(Frames, JsonlRoundTrip) {
  TempDir dir;
  FrameSet fs;
  fs.meta.detuning = units::angular(120e3);
  fs.meta.mask = "ideal";
  fs.meta.seed = 42;
  fs.meta.stream = 7;
  fs.meta.n_pixels = 5;
  fs.meta.pixel_pitch = 0.27e-3;
  fs.meta.mean_signal = 2.5;
  fs.meta.mean_background = 0.1007;
  fs.meta.epsilon = units::angular(450e3);
  fs.frames = {{0, 1, 2, 0, 0}, {3, 0, 0, 0, 4294967295u}};
  const auto p = dir.path() / "f.jsonl";
  write_frames_jsonl(fs, p);
  const auto back = read_frames_jsonl(p);
  EXPECT_EQ(back.frames, fs.frames);
  EXPECT_EQ(back.meta.detuning, fs.meta.detuning);
  EXPECT_EQ(back.meta.seed, 42u);
  EXPECT_EQ(back.meta.stream, 7u);
  EXPECT_EQ(back.meta.epsilon, fs.meta.epsilon);
  EXPECT_EQ(back.meta.mask, "ideal");

  // writing the same set twice gives identical bytes
  write_frames_jsonl(back, dir.path() / "g.jsonl");
  EXPECT_EQ(read_text(p), read_text(dir.path() / "g.jsonl"));
}

TEST(Frames, TruncatedFileIsRejected) {
  TempDir dir;
  FrameSet fs;
  fs.meta.n_pixels = 2;
  fs.frames = {{1, 2}, {3, 4}};
  const auto p = dir.path() / "f.jsonl";
  write_frames_jsonl(fs, p);
  auto text = read_text(p);
  text.erase(text.rfind('['));
  write_text(p, text);
  EXPECT_THROW(read_frames_jsonl(p), ConfigError);
  write_text(p, R"({"format": "gemspec.frames/1"})" "\n");
  EXPECT_THROW(read_frames_jsonl(p), ConfigError);
  EXPECT_THROW(read_frames_jsonl(dir.path() / "none.jsonl"), ConfigError);
}

TEST(Frames, HistogramCsv) {
  TempDir dir;
  Histogram h{{3, 0, 5}, 8};
  const std::vector<double> angles{-0.27e-3, 0.0, 0.27e-3};
  write_histogram_csv(h, angles, dir.path() / "h.csv");
  EXPECT_EQ(read_text(dir.path() / "h.csv"), "pixel,angle_mrad,counts\n0,-0.27,3\n1,0,0\n2,0.27,5\n");
}

// --- mask images -------------------------------------------------------------

TEST(MaskImage, PngRoundTrip16And8Bit) {
  TempDir dir;
  for (int depth : {16, 8}) {
    GrayImage img{7, 5, depth, {}};
    for (std::size_t k = 0; k < 35; ++k) img.pixels.push_back(static_cast<std::uint16_t>((k * 1871) % (depth == 16 ? 65536 : 256)));
    const auto p = dir.path() / ("m" + std::to_string(depth) + ".png");
    write_gray_png(p, img);
    const auto back = read_gray_png(p);
    EXPECT_EQ(back.width, 7u);
    EXPECT_EQ(back.height, 5u);
    EXPECT_EQ(back.bit_depth, depth);
    EXPECT_EQ(back.pixels, img.pixels);
  }
  EXPECT_THROW(read_gray_png(dir.path() / "none.png"), ConfigError);
}

TEST(MaskImage, SidecarParsing) {
  TempDir dir;
  const auto p = dir.path() / "m.json";
  write_text(p, R"({"ppcm": "104 px/mm", "i_2pi": 255, "z_axis": "rows"})");
  const auto s = read_sidecar(p);
  EXPECT_DOUBLE_EQ(s.pixels_per_length, 104e3);
  EXPECT_DOUBLE_EQ(s.i_2pi, 255.0);
  EXPECT_FALSE(s.z_along_columns);
  write_text(p, R"({"ppcm": 104, "i_2pi": 255})");
  EXPECT_THROW(read_sidecar(p), ConfigError);
  write_text(p, R"({"ppcm": "104 px/mm", "i_2pi": 0})");
  EXPECT_THROW(read_sidecar(p), ConfigError);
  write_text(p, R"({"ppcm": "104 px/mm", "i_2pi": 255, "z_axis": "diagonal"})");
  EXPECT_THROW(read_sidecar(p), ConfigError);
  EXPECT_EQ(sidecar_path("a/b/mask.png"), fs::path("a/b/mask.json"));
}

TEST(MaskImage, SavedMaskReloadsAsTheWrappedPhase) {
  TempDir dir;
  const auto grid = Grid2D::make(256, 256, 4e-3, 4e-3);
  // one image pixel per grid cell and an odd image size put image pixels on grid nodes
  const double ppl = 1.0 / grid.dx;
  const auto mask = grating_mask(grid, kTwoPi * 3.0 / units::mm);
  const auto png = dir.path() / "grating.png";
  save_mask_image(mask, png, ppl, 255, 255);
  ASSERT_TRUE(fs::exists(sidecar_path(png)));
  const auto back = load_mask_image(png, grid);
  EXPECT_EQ(back.provenance, MaskProvenance::external_image);
  double worst = 0.0;
  for (std::size_t j = 1; j < 256; j += 5)
    for (std::size_t i = 1; i < 256; i += 3)
      worst = std::max(worst, std::abs(std::polar(1.0, back.phase(i, j)) - std::polar(1.0, mask.phase(i, j))));
  EXPECT_LT(worst, 1e-3);
  EXPECT_THROW(load_mask_image(dir.path() / "none.png", grid), ConfigError);
}

TEST(MaskImage, OutsideImageGetsZeroPhaseAndWarning) {
  GrayImage img{4, 4, 8, std::vector<std::uint16_t>(16, 100)};
  MaskImageSidecar meta{1e3, 200.0, true};  // 4 mm square image
  const auto grid = Grid2D::make(16, 16, 8e-3, 8e-3);
  const auto m = mask_from_image(img, meta, grid);
  EXPECT_EQ(m.warnings.size(), 1u);
  EXPECT_DOUBLE_EQ(m.phase(0, 0), 0.0);
  EXPECT_NEAR(m.phase(8, 8), kPi, 1e-12);
  EXPECT_THROW(mask_from_image(GrayImage{1, 4, 8, std::vector<std::uint16_t>(4, 0)}, meta, grid), ConfigError);
}
