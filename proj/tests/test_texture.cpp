#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cosparse/analysis_operator.hpp"
#include "cosparse/error.hpp"
#include "cosparse/texture.hpp"

using namespace cosparse;

namespace {

CoSupportSignature random_signature(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> uni(1e-6, 1.0);
  CoSupportSignature s;
  s.values.resize(k);
  for (auto& v : s.values) v = uni(rng);
  return s;
}

GrayImage random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 255.0);
  GrayImage img(w, h);
  for (auto& v : img.values()) v = uni(rng);
  return img;
}

}  // namespace

TEST_CASE("constant window is flat") {
  GrayImage img(9, 9, 50.0);
  CHECK_FALSE(extract_patch(img, {4, 4}, PatchOptions{}).has_value());
}

TEST_CASE("textured patch is zero mean and unit norm") {
  auto img = random_image(20, 20, 1);
  for (Pixel p : {Pixel{0, 0}, Pixel{10, 7}, Pixel{19, 19}}) {
    auto patch = extract_patch(img, p, PatchOptions{});
    REQUIRE(patch);
    double sum = 0, sq = 0;
    for (double v : patch->values) {
      sum += v;
      sq += v * v;
    }
    CHECK(std::abs(sum) < 1e-9);
    CHECK(std::abs(sq - 1.0) < 1e-9);
    CHECK(patch->center == p);
  }
}

TEST_CASE("uniform-mask step patch matches the hand computation") {
  GrayImage img(3, 3, 0.0);
  for (int x = 0; x < 3; ++x) img(x, 1) = 1.0;
  PatchOptions opts{3, std::numeric_limits<double>::infinity()};
  auto patch = extract_patch(img, {1, 1}, opts);
  REQUIRE(patch);
  const double lo = -1.0 / (3.0 * std::sqrt(2.0));
  const double hi = 2.0 / (3.0 * std::sqrt(2.0));
  const double expected[9] = {lo, lo, lo, hi, hi, hi, lo, lo, lo};
  for (int i = 0; i < 9; ++i) CHECK(patch->values[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("border windows are mirrored without repeating the edge") {
  GrayImage img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img(x, y) = x * 10.0 + y * y;
  PatchOptions opts{3, std::numeric_limits<double>::infinity()};
  // Window at the corner built by hand: index -1 reflects to 1.
  std::vector<double> manual;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) manual.push_back(img(std::abs(dx), std::abs(dy)));
  double mean = 0;
  for (double v : manual) mean += v / 9;
  double norm = 0;
  for (auto& v : manual) {
    v -= mean;
    norm += v * v;
  }
  auto patch = extract_patch(img, {0, 0}, opts);
  REQUIRE(patch);
  for (int i = 0; i < 9; ++i) CHECK(patch->values[i] == doctest::Approx(manual[i] / std::sqrt(norm)).epsilon(1e-12));
}

TEST_CASE("patches ignore bias and gain") {
  auto img = random_image(15, 15, 2);
  GrayImage shifted(15, 15);
  for (std::size_t i = 0; i < img.size(); ++i) shifted[i] = 3.5 * img[i] - 40.0;
  for (Pixel p : {Pixel{7, 7}, Pixel{0, 3}, Pixel{14, 14}}) {
    auto a = extract_patch(img, p, PatchOptions{});
    auto b = extract_patch(shifted, p, PatchOptions{});
    REQUIRE(a);
    REQUIRE(b);
    for (std::size_t i = 0; i < a->values.size(); ++i) CHECK(std::abs(a->values[i] - b->values[i]) < 1e-9);
  }
}

TEST_CASE("extract_patch validates its arguments") {
  GrayImage img(5, 5, 1.0);
  CHECK_THROWS_AS(extract_patch(img, {2, 2}, PatchOptions{4, 1.0}), ParameterError);
  CHECK_THROWS_AS(extract_patch(img, {5, 2}, PatchOptions{3, 1.0}), ParameterError);
  CHECK_THROWS_AS(extract_patch(img, {-1, 0}, PatchOptions{3, 1.0}), ParameterError);
}

TEST_CASE("smooth co-support values") {
  std::vector<double> zeros(5, 0.0);
  for (double v : smooth_cosupport(zeros, 0.01).values) CHECK(v == 1.0);

  const double sigma = 0.01;
  std::vector<double> a{std::sqrt(sigma)};
  CHECK(smooth_cosupport(a, sigma).values[0] == doctest::Approx(0.367879441171).epsilon(1e-12));

  std::vector<double> fixed{0.05};
  CHECK(smooth_cosupport(fixed, 1e-6).values[0] < 1e-100);
  CHECK_THROWS_AS(smooth_cosupport(fixed, 0.0), ParameterError);
}

TEST_CASE("tsm is a pseudometric") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    auto a = random_signature(rng, 30), b = random_signature(rng, 30), c = random_signature(rng, 30);
    CHECK(tsm(a, a) == 0.0);
    CHECK(tsm(a, b) == tsm(b, a));
    CHECK(tsm(a, c) <= tsm(a, b) + tsm(b, c));
  }
  CoSupportSignature short_sig{{1.0}};
  CHECK_THROWS_AS(tsm(short_sig, random_signature(rng, 2)), DimensionError);
}

TEST_CASE("representative takes the component-wise majority") {
  std::vector<CoSupportSignature> sigs{{{1, 0}}, {{1, 1}}, {{0, 0}}};
  auto rep = textural_representative(sigs);
  CHECK(rep.signature.values == std::vector<double>{1, 0});
  CHECK(rep.member_count == 3);

  std::vector<CoSupportSignature> one{{{0.2, 0.7}}};
  CHECK(textural_representative(one).signature.values == one[0].values);

  std::vector<CoSupportSignature> pair{{{0.2, 1.0}}, {{0.6, 0.0}}};
  auto mid = textural_representative(pair).signature.values;
  CHECK(mid[0] == doctest::Approx(0.4));
  CHECK(mid[1] == doctest::Approx(0.5));

  CHECK_THROWS_AS(textural_representative(std::vector<CoSupportSignature>{}), ParameterError);
}

TEST_CASE("representative minimizes the l1 cost per component") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    std::vector<CoSupportSignature> sigs;
    for (int i = 0; i < 5; ++i) sigs.push_back(random_signature(rng, 8));
    auto rep = textural_representative(sigs).signature.values;
    for (int j = 0; j < 8; ++j) {
      auto cost = [&](double c) {
        double s = 0;
        for (auto& sig : sigs) s += std::abs(c - sig.values[j]);
        return s;
      };
      double best = std::numeric_limits<double>::infinity();
      for (int g = 0; g <= 100000; ++g) best = std::min(best, cost(g / 100000.0));
      CHECK(cost(rep[j]) <= best + 1e-12);
      for (auto& sig : sigs) CHECK(cost(rep[j]) <= cost(sig.values[j]));
    }
  }
}

TEST_CASE("signature field agrees with per-pixel evaluation") {
  auto img = random_image(12, 10, 6);
  for (int x = 0; x < 12; ++x)
    for (int y = 6; y < 10; ++y) img(x, y) = 90.0;  // flat band at the bottom... only partly
  auto op = default_operator(5, 2.0);
  PatchOptions opts{5, 1.25};
  auto field = compute_signatures(img, op, 0.05, opts);
  CHECK(field.rows() == op.rows());
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 12; ++x) {
      const std::size_t p = img.index(x, y);
      auto patch = extract_patch(img, {x, y}, opts);
      CHECK(field.is_flat(p) == !patch.has_value());
      if (!patch) {
        for (double v : field.signature(p).values) CHECK(v == 1.0);
        continue;
      }
      auto sig = smooth_cosupport(analyze(op, patch->values), 0.05);
      auto raw = field.raw(p);
      for (int r = 0; r < op.rows(); ++r) CHECK(std::abs(raw[r] - sig.values[r]) < 1e-6);
      CHECK(field.distance(p, sig.values) < 1e-4);
    }
}
