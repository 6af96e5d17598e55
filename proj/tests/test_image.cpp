#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "mfish/error.hpp"
#include "mfish/image.hpp"
#include "oracles.hpp"

using namespace mfish;
namespace fs = std::filesystem;

namespace {

GrayImage filled(Eigen::Index h, Eigen::Index w, std::uint8_t v) {
  return GrayImage::Constant(h, w, v);
}

GrayImage random_gray(std::mt19937_64& rng, Eigen::Index h, Eigen::Index w) {
  std::uniform_int_distribution<int> d(0, 255);
  GrayImage img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = static_cast<std::uint8_t>(d(rng));
  return img;
}

void write_minimal_case(const fs::path& dir, Eigen::Index h, Eigen::Index w) {
  fs::create_directories(dir);
  for (int c = 0; c < kFluorChannels; ++c) write_pgm(filled(h, w, static_cast<std::uint8_t>(c)), dir / kChannelFiles[c]);
  write_pgm(filled(h, w, 9), dir / kDapiFile);
}

}  // namespace

TEST_CASE("pgm round trip is exact on random rasters") {
  oracle::TempDir tmp("pgm");
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> side(1, 40);
  for (int trial = 0; trial < 50; ++trial) {
    const GrayImage img = random_gray(rng, side(rng), side(rng));
    const auto path = tmp.path() / "x.pgm";
    write_pgm(img, path);
    const GrayImage back = read_pgm(path);
    REQUIRE(back.rows() == img.rows());
    REQUIRE(back.cols() == img.cols());
    CHECK((back == img).all());
  }
}

TEST_CASE("read_pgm skips header comments") {
  oracle::TempDir tmp("pgmc");
  const auto path = tmp.path() / "c.pgm";
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n# a comment\n3 # width\n1\n255\n";
    out.write("\x01\x02\x03", 3);
  }
  const GrayImage img = read_pgm(path);
  REQUIRE(img.cols() == 3);
  REQUIRE(img.rows() == 1);
  CHECK(img(0, 2) == 3);
}

TEST_CASE("read_pgm rejects malformed input") {
  oracle::TempDir tmp("pgmbad");
  const auto write = [&](const std::string& name, const std::string& bytes) {
    std::ofstream out(tmp.path() / name, std::ios::binary);
    out << bytes;
    return tmp.path() / name;
  };
  CHECK_THROWS_AS(read_pgm(write("p2.pgm", "P2\n1 1\n255\n0\n")), FormatError);
  CHECK_THROWS_AS(read_pgm(write("deep.pgm", "P5\n1 1\n65535\n\0\0")), FormatError);
  CHECK_THROWS_AS(read_pgm(write("short.pgm", "P5\n4 4\n255\nab")), FormatError);
  CHECK_THROWS_AS(read_pgm(write("empty.pgm", "")), FormatError);
  CHECK_THROWS_AS(read_pgm(tmp.path() / "missing.pgm"), IoError);
}

TEST_CASE("load_case reads a minimal case without truth") {
  oracle::TempDir tmp("case");
  write_minimal_case(tmp.path(), 4, 4);
  const Case c = load_case(tmp.path());
  CHECK(c.image.width() == 4);
  CHECK(c.image.height() == 4);
  CHECK_FALSE(c.truth.has_value());
  CHECK(c.image.channels[3](1, 1) == 3);
}

TEST_CASE("load_case rejects a channel with different dimensions") {
  oracle::TempDir tmp("casebad");
  write_minimal_case(tmp.path(), 4, 4);
  write_pgm(filled(4, 5, 1), tmp.path() / "ch2.pgm");
  CHECK_THROWS_AS(load_case(tmp.path()), FormatError);
}

TEST_CASE("load_case reports a missing channel") {
  oracle::TempDir tmp("casemiss");
  write_minimal_case(tmp.path(), 4, 4);
  fs::remove(tmp.path() / "ch4.pgm");
  CHECK_THROWS_AS(load_case(tmp.path()), IoError);
}

TEST_CASE("truth labels survive a save/load cycle bit-exactly") {
  oracle::TempDir tmp("truth");
  write_minimal_case(tmp.path(), 4, 4);
  LabelMap truth = LabelMap::Zero(4, 4);
  truth(0, 0) = 3;
  truth(1, 2) = 255;
  truth(3, 3) = 3;
  save_labelmap(truth, tmp.path() / kTruthFile);
  const Case c = load_case(tmp.path());
  REQUIRE(c.truth.has_value());
  CHECK((*c.truth == truth).all());

  oracle::TempDir other("truth2");
  save_case(c, other.path());
  for (const char* f : {"ch0.pgm", "ch4.pgm", "dapi.pgm", "truth.pgm"}) {
    CHECK(oracle::read_file(tmp.path() / f) == oracle::read_file(other.path() / f));
  }
}

TEST_CASE("save_labelmap writes the labels as the payload") {
  oracle::TempDir tmp("lm");
  LabelMap m(2, 2);
  m << 0, 1, 2, 255;
  const auto path = tmp.path() / "m.pgm";
  save_labelmap(m, path);
  const std::string bytes = oracle::read_file(path);
  REQUIRE(bytes.size() >= 4);
  CHECK(bytes.substr(bytes.size() - 4) == std::string("\x00\x01\x02\xff", 4));
  CHECK((load_labelmap(path) == m).all());

  m(1, 0) = 300;
  CHECK_THROWS_AS(save_labelmap(m, path), InvalidArgument);
  m(1, 0) = -1;
  CHECK_THROWS_AS(save_labelmap(m, path), InvalidArgument);
}

TEST_CASE("default palette has 26 distinct entries with black and white ends") {
  const Palette& p = default_palette();
  CHECK(p[0] == Rgb{0, 0, 0});
  CHECK(p[25] == Rgb{255, 255, 255});
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) CHECK(p[i] != p[j]);
  }
}

TEST_CASE("render_classmap paints palette colours") {
  oracle::TempDir tmp("render");
  const auto path = tmp.path() / "r.ppm";

  SUBCASE("all background is black") {
    render_classmap(LabelMap::Zero(3, 4), path);
    const std::string bytes = oracle::read_file(path);
    REQUIRE(bytes.size() >= 36);
    CHECK(bytes.substr(bytes.size() - 36) == std::string(36, '\0'));
    CHECK(bytes.rfind("P6", 0) == 0);
  }
  SUBCASE("one class on black") {
    LabelMap m = LabelMap::Zero(2, 2);
    m(1, 1) = 7;
    render_classmap(m, path);
    const std::string bytes = oracle::read_file(path);
    const std::string px = bytes.substr(bytes.size() - 12);
    const Rgb c = default_palette()[7];
    CHECK(px.substr(0, 9) == std::string(9, '\0'));
    CHECK(static_cast<std::uint8_t>(px[9]) == c[0]);
    CHECK(static_cast<std::uint8_t>(px[10]) == c[1]);
    CHECK(static_cast<std::uint8_t>(px[11]) == c[2]);
  }
  SUBCASE("identical maps render to identical bytes") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> d(0, 24);
    LabelMap m(20, 30);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
    m(0, 0) = 255;
    render_classmap(m, tmp.path() / "a.ppm");
    render_classmap(m, tmp.path() / "b.ppm");
    CHECK(oracle::read_file(tmp.path() / "a.ppm") == oracle::read_file(tmp.path() / "b.ppm"));
  }
  SUBCASE("labels outside the palette are rejected") {
    LabelMap m = LabelMap::Zero(2, 2);
    m(0, 1) = 30;
    CHECK_THROWS_AS(render_classmap(m, path), InvalidArgument);
  }
}

TEST_CASE("load_palette overrides listed entries") {
  oracle::TempDir tmp("pal");
  const auto path = tmp.path() / "p.txt";
  {
    std::ofstream out(path);
    out << "# custom\n3 1 2 3\n255 9 9 9\n";
  }
  const Palette p = load_palette(path);
  CHECK(p[3] == Rgb{1, 2, 3});
  CHECK(p[25] == Rgb{9, 9, 9});
  CHECK(p[4] == default_palette()[4]);
  {
    std::ofstream out(path);
    out << "40 1 2 3\n";
  }
  CHECK_THROWS_AS(load_palette(path), FormatError);
}
