#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Core>

namespace mfish {

/// Dense row-major raster. rows() is the image height and cols() the width,
/// so pixel (x, y) is `r(y, x)` and the linear index `y * width + x` addresses
/// `r.data()` directly.
template <typename Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using GrayImage = Raster<std::uint8_t>;
using LabelMap = Raster<std::int32_t>;
using BinaryMask = Raster<bool>;

using PixelIndex = Eigen::Index;

inline constexpr int kFluorChannels = 5;

/// Ground-truth value marking chromosome overlap pixels.
inline constexpr std::int32_t kOverlapLabel = 255;
inline constexpr int kChromosomeClasses = 24;

/// One M-FISH case: five fluor channels (aqua, red, far-red, green, gold) and
/// the DAPI counterstain, all of identical size.
struct MultichannelImage {
  std::array<GrayImage, kFluorChannels> channels;
  GrayImage dapi;

  Eigen::Index width() const { return dapi.cols(); }
  Eigen::Index height() const { return dapi.rows(); }

  /// Throws InvalidArgument if any raster differs in size or is empty.
  void validate() const;
};

struct Case {
  MultichannelImage image;
  std::optional<LabelMap> truth;
};

inline constexpr std::array<const char*, kFluorChannels> kChannelFiles = {
    "ch0.pgm", "ch1.pgm", "ch2.pgm", "ch3.pgm", "ch4.pgm"};
inline constexpr const char* kDapiFile = "dapi.pgm";
inline constexpr const char* kTruthFile = "truth.pgm";

GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& img, const std::filesystem::path& path);

/// Loads `ch0.pgm`..`ch4.pgm`, `dapi.pgm` and, if present, `truth.pgm`.
Case load_case(const std::filesystem::path& dir);
void save_case(const Case& c, const std::filesystem::path& dir);

/// Writes labels as an 8-bit PGM. Labels outside 0..255 are rejected.
void save_labelmap(const LabelMap& map, const std::filesystem::path& path);
LabelMap load_labelmap(const std::filesystem::path& path);

using Rgb = std::array<std::uint8_t, 3>;

/// Classmap palette: index 0 is background, 1..24 the chromosome classes and
/// index 25 the overlap label 255.
using Palette = std::array<Rgb, 26>;

const Palette& default_palette();

/// Reads `index r g b` lines (index 0..24 or 255); unlisted entries keep
/// their default colour.
Palette load_palette(const std::filesystem::path& path);

/// Renders a classmap as binary PPM. Labels must be in {0..24, 255}.
void render_classmap(const LabelMap& map, const std::filesystem::path& path,
                     const Palette& palette = default_palette());

}  // namespace mfish
