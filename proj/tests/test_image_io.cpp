#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <string>

#include "cosparse/error.hpp"
#include "cosparse/image_io.hpp"

using namespace cosparse;

namespace {

ColorImage quantized_image(int w, int h, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  ColorImage img(w, h, channels);
  for (auto& v : img.values()) v = byte(rng) / 255.0;
  return img;
}

void check_close(const ColorImage& a, const ColorImage& b) {
  REQUIRE(a.width() == b.width());
  REQUIRE(a.height() == b.height());
  REQUIRE(a.channels() == b.channels());
  for (std::size_t i = 0; i < a.values().size(); ++i) CHECK(std::abs(a.values()[i] - b.values()[i]) < 1e-12);
}

}  // namespace

TEST_CASE("png round trip") {
  auto rgb = quantized_image(7, 5, 3, 1);
  check_close(decode_image(encode_png(rgb)), rgb);
  auto gray = quantized_image(4, 9, 1, 2);
  check_close(decode_image(encode_png(gray)), gray);
}

TEST_CASE("binary pnm input") {
  std::string ppm = "P6\n# comment\n2 1\n255\n";
  ppm += std::string{char(255), char(0), char(10), char(0), char(128), char(255)};
  Bytes bytes(ppm.begin(), ppm.end());
  auto img = decode_image(bytes);
  CHECK(img.channels() == 3);
  CHECK(img.width() == 2);
  CHECK(img.at(0, 0)[0] == 1.0);
  CHECK(img.at(1, 0)[1] == doctest::Approx(128.0 / 255));

  std::string pgm = "P5 3 1 255\n";
  pgm += std::string{char(0), char(17), char(34)};
  auto g = decode_image(Bytes(pgm.begin(), pgm.end()));
  CHECK(g.channels() == 1);
  CHECK(g.at(2, 0)[0] == doctest::Approx(34.0 / 255));
  auto idx = decode_index_map(Bytes(pgm.begin(), pgm.end()));
  CHECK(idx(1, 0) == 17);
}

TEST_CASE("garbage is rejected") {
  Bytes junk{1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK_THROWS_AS(decode_image(junk), ImageIoError);
  auto png = encode_png(quantized_image(8, 8, 3, 3));
  png.resize(png.size() / 2);
  CHECK_THROWS_AS(decode_image(png), ImageIoError);
  CHECK_THROWS_AS(read_image("/nonexistent/file.png"), Error);
}

TEST_CASE("label maps round trip with void") {
  Segmentation seg{Field<int>(6, 4, 0), 5};
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) seg.labels(x, y) = (x + y) % 5;
  seg.labels(0, 0) = -1;
  auto bytes = encode_label_png(seg);
  auto back = decode_label_png(bytes);
  CHECK(back.labels == seg.labels);
  auto raw = decode_index_map(bytes);
  CHECK(raw(0, 0) == 0);
  CHECK(raw(1, 0) == 2);

  auto path = std::filesystem::temp_directory_path() / "cosparse_labels.png";
  write_file(path, bytes);
  CHECK(read_label_map(path).labels == seg.labels);
}

TEST_CASE("overlay blends with the label palette") {
  std::set<std::array<std::uint8_t, 3>> colors;
  for (int l = 0; l < 13; ++l) colors.insert(label_color(l));
  CHECK(colors.size() == 13);

  auto img = quantized_image(3, 2, 3, 4);
  Segmentation seg{Field<int>(3, 2, 1), 2};
  auto over = label_overlay(img, seg);
  const auto c = label_color(1);
  for (int ch = 0; ch < 3; ++ch)
    CHECK(over.at(2, 1)[ch] == doctest::Approx(0.5 * img.at(2, 1)[ch] + 0.5 * c[ch] / 255.0));
}
