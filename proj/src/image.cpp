#include "mfish/image.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

#include "mfish/error.hpp"

namespace mfish {

namespace fs = std::filesystem;

namespace {

// Reads one header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in, const fs::path& path) {
  std::string token;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      if (!token.empty()) return token;
    } else {
      token.push_back(static_cast<char>(ch));
    }
    ch = in.get();
  }
  if (token.empty()) throw FormatError("truncated netpbm header: " + path.string());
  return token;
}

long parse_header_int(const std::string& token, const fs::path& path) {
  std::size_t used = 0;
  long value = 0;
  try {
    value = std::stol(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || value <= 0) {
    throw FormatError("bad netpbm header field '" + token + "' in " + path.string());
  }
  return value;
}

void write_bytes(const fs::path& path, const std::string& header, const char* data,
                 std::size_t size) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << header;
  out.write(data, static_cast<std::streamsize>(size));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void MultichannelImage::validate() const {
  if (dapi.size() == 0) throw InvalidArgument("empty DAPI raster");
  for (const auto& ch : channels) {
    if (ch.rows() != dapi.rows() || ch.cols() != dapi.cols()) {
      throw InvalidArgument("channel dimensions differ from DAPI");
    }
  }
}

GrayImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  if (next_token(in, path) != "P5") throw FormatError("not a binary PGM (P5): " + path.string());
  const long width = parse_header_int(next_token(in, path), path);
  const long height = parse_header_int(next_token(in, path), path);
  const long maxval = parse_header_int(next_token(in, path), path);
  if (maxval > 255) throw FormatError("16-bit PGM not supported: " + path.string());

  GrayImage img(height, width);
  in.read(reinterpret_cast<char*>(img.data()), static_cast<std::streamsize>(img.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.size())) {
    throw FormatError("truncated PGM payload: " + path.string());
  }
  return img;
}

void write_pgm(const GrayImage& img, const fs::path& path) {
  std::ostringstream header;
  header << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  write_bytes(path, header.str(), reinterpret_cast<const char*>(img.data()),
              static_cast<std::size_t>(img.size()));
}

Case load_case(const fs::path& dir) {
  Case c;
  for (int i = 0; i < kFluorChannels; ++i) {
    const fs::path p = dir / kChannelFiles[i];
    if (!fs::exists(p)) throw IoError("missing channel file: " + p.string());
    c.image.channels[i] = read_pgm(p);
  }
  const fs::path dapi = dir / kDapiFile;
  if (!fs::exists(dapi)) throw IoError("missing channel file: " + dapi.string());
  c.image.dapi = read_pgm(dapi);
  try {
    c.image.validate();
  } catch (const InvalidArgument&) {
    throw FormatError("dimension mismatch across channel files in " + dir.string());
  }

  const fs::path truth = dir / kTruthFile;
  if (fs::exists(truth)) {
    const GrayImage t = read_pgm(truth);
    if (t.rows() != c.image.height() || t.cols() != c.image.width()) {
      throw FormatError("truth dimensions differ from channels in " + dir.string());
    }
    c.truth = t.cast<std::int32_t>();
  }
  return c;
}

void save_case(const Case& c, const fs::path& dir) {
  c.image.validate();
  fs::create_directories(dir);
  for (int i = 0; i < kFluorChannels; ++i) write_pgm(c.image.channels[i], dir / kChannelFiles[i]);
  write_pgm(c.image.dapi, dir / kDapiFile);
  if (c.truth) save_labelmap(*c.truth, dir / kTruthFile);
}

void save_labelmap(const LabelMap& map, const fs::path& path) {
  if (map.size() > 0 && (map.minCoeff() < 0 || map.maxCoeff() > 255)) {
    throw InvalidArgument("label outside 0..255 cannot be stored in 8-bit PGM: " + path.string());
  }
  write_pgm(map.cast<std::uint8_t>(), path);
}

LabelMap load_labelmap(const fs::path& path) { return read_pgm(path).cast<std::int32_t>(); }

const Palette& default_palette() {
  // 24 class colours spread over hue and brightness so neighbouring class
  // numbers are easy to tell apart.
  static const Palette palette = {{
      {0, 0, 0},        // background
      {230, 25, 75},    // 1
      {60, 180, 75},    // 2
      {255, 225, 25},   // 3
      {0, 130, 200},    // 4
      {245, 130, 48},   // 5
      {145, 30, 180},   // 6
      {70, 240, 240},   // 7
      {240, 50, 230},   // 8
      {210, 245, 60},   // 9
      {250, 190, 212},  // 10
      {0, 128, 128},    // 11
      {220, 190, 255},  // 12
      {170, 110, 40},   // 13
      {255, 250, 200},  // 14
      {128, 0, 0},      // 15
      {170, 255, 195},  // 16
      {128, 128, 0},    // 17
      {255, 215, 180},  // 18
      {0, 0, 128},      // 19
      {128, 128, 128},  // 20
      {255, 99, 71},    // 21
      {46, 139, 87},    // 22
      {100, 149, 237},  // 23 (X)
      {218, 165, 32},   // 24 (Y)
      {255, 255, 255},  // overlap (255)
  }};
  return palette;
}

Palette load_palette(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open palette: " + path.string());
  Palette palette = default_palette();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    int index = 0;
    int r = 0;
    int g = 0;
    int b = 0;
    if (!(fields >> index)) continue;
    if (!(fields >> r >> g >> b) || r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 'index r g b'");
    }
    int slot = -1;
    if (index >= 0 && index <= kChromosomeClasses) slot = index;
    if (index == kOverlapLabel) slot = kChromosomeClasses + 1;
    if (slot < 0) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad palette index");
    palette[slot] = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                     static_cast<std::uint8_t>(b)};
  }
  return palette;
}

void render_classmap(const LabelMap& map, const fs::path& path, const Palette& palette) {
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(map.size()) * 3);
  for (PixelIndex i = 0; i < map.size(); ++i) {
    const std::int32_t label = map.data()[i];
    int slot = -1;
    if (label >= 0 && label <= kChromosomeClasses) slot = label;
    if (label == kOverlapLabel) slot = kChromosomeClasses + 1;
    if (slot < 0) throw InvalidArgument("label " + std::to_string(label) + " has no palette entry");
    const Rgb& c = palette[slot];
    std::copy(c.begin(), c.end(), rgb.begin() + 3 * i);
  }
  std::ostringstream header;
  header << "P6\n" << map.cols() << ' ' << map.rows() << "\n255\n";
  write_bytes(path, header.str(), reinterpret_cast<const char*>(rgb.data()), rgb.size());
}

}  // namespace mfish
