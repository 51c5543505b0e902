// Copyright 2026 The hetsched Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>

#include "doctest.h"
#include "hetsched/sobel.h"
#include "oracle/sobel_oracle.h"

using namespace hetsched;
using namespace hetsched::sobel;

namespace {

Bytes of(std::string_view s) { return Bytes(s.begin(), s.end()); }

GrayImage random_image(std::mt19937 &rng, std::size_t w, std::size_t h) {
  GrayImage img(w, h);
  for (auto &p : img.pixels()) p = static_cast<std::uint8_t>(rng());
  return img;
}

PgmErrorCode pgm_error(const Bytes &bytes) {
  try {
    parse_pgm(bytes);
  } catch (const PgmError &e) {
    return e.code();
  }
  FAIL("expected PgmError");
  return PgmErrorCode::kBadHeader;
}

Neighborhood uniform(int c) {
  Neighborhood m;
  for (auto &row : m) row.fill(c);
  return m;
}

}  // namespace

TEST_CASE("parse_pgm") {
  auto bytes = of("P5\n2 2\n255\n");
  bytes.insert(bytes.end(), {1, 2, 3, 4});
  const auto img = parse_pgm(bytes);
  CHECK(img.width() == 2);
  CHECK(img.height() == 2);
  CHECK(img.at(1, 0) == 2);
  CHECK(img.at(0, 1) == 3);

  auto commented = of("P5 # magic\n# a comment line\n2\t2 # dims\n255\n");
  commented.insert(commented.end(), {1, 2, 3, 4});
  CHECK(parse_pgm(commented) == img);

  // A raster byte equal to whitespace right after maxval is data.
  auto ws = of("P5\n1 1\n255\n\n");
  CHECK(parse_pgm(ws).at(0, 0) == '\n');
}

TEST_CASE("parse_pgm errors") {
  CHECK(pgm_error(of("P2\n1 1\n255\n0")) == PgmErrorCode::kUnsupportedFormat);
  CHECK(pgm_error(of("P6\n1 1\n255\n000")) == PgmErrorCode::kUnsupportedFormat);
  CHECK(pgm_error(of("")) == PgmErrorCode::kUnsupportedFormat);
  auto short_raster = of("P5\n4 4\n255\n");
  short_raster.resize(short_raster.size() + 15);
  CHECK(pgm_error(short_raster) == PgmErrorCode::kShortRaster);
  CHECK(pgm_error(of("P5\n1 1\n65535\n00")) == PgmErrorCode::kUnsupportedMaxval);
  CHECK(pgm_error(of("P5\n1 1\n15\n0")) == PgmErrorCode::kUnsupportedMaxval);
  CHECK(pgm_error(of("P5\n0 1\n255\n")) == PgmErrorCode::kBadHeader);
  CHECK(pgm_error(of("P5\nx 1\n255\n0")) == PgmErrorCode::kBadHeader);
  CHECK(pgm_error(of("P5\n1 1\n255")) == PgmErrorCode::kBadHeader);
  CHECK(pgm_error(of("P5\n99999999999999999999 1\n255\n0")) == PgmErrorCode::kBadHeader);
}

TEST_CASE("write_pgm") {
  auto expected = of("P5\n1 1\n255\n");
  expected.push_back(0);
  CHECK(write_pgm(GrayImage(1, 1)) == expected);
  const auto a = write_pgm(GrayImage(2, 3));
  const auto b = write_pgm(GrayImage(3, 2));
  CHECK(std::string(a.begin(), a.begin() + 7) == "P5\n2 3\n");
  CHECK(std::string(b.begin(), b.begin() + 7) == "P5\n3 2\n");

  std::mt19937 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto img = random_image(rng, 1 + rng() % 40, 1 + rng() % 40);
    CHECK(parse_pgm(write_pgm(img)) == img);
  }
}

TEST_CASE("neighborhood clamps to the edge") {
  GrayImage three(3, 3, std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(neighborhood(three, 1, 1) == Neighborhood{{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}}});

  const int a = 10, b = 20, c = 30, d = 40;
  GrayImage two(2, 2, std::vector<std::uint8_t>{a, b, c, d});
  CHECK(neighborhood(two, 0, 0) == Neighborhood{{{a, a, b}, {a, a, b}, {c, c, d}}});

  GrayImage one(1, 1, 77);
  CHECK(neighborhood(one, 0, 0) == uniform(77));

  CHECK_THROWS_AS(neighborhood(two, 2, 0), std::out_of_range);
  CHECK_THROWS_AS(neighborhood(two, 0, 2), std::out_of_range);
}

TEST_CASE("sobel_pixel analytic cases") {
  for (int c : {0, 1, 128, 255}) CHECK(sobel_pixel(uniform(c)) == 0);

  const Neighborhood right_edge{{{0, 0, 255}, {0, 0, 255}, {0, 0, 255}}};
  CHECK(gradient(right_edge).sx == 0);
  CHECK(gradient(right_edge).sy == -1020);
  CHECK(sobel_pixel(right_edge) == 255);

  const Neighborhood bottom_edge{{{0, 0, 0}, {0, 0, 0}, {255, 255, 255}}};
  CHECK(gradient(bottom_edge).sx == 1020);
  CHECK(gradient(bottom_edge).sy == 0);
  CHECK(sobel_pixel(bottom_edge) == 255);

  // sqrt(3^2 + 4^2) = 5; sqrt(2) rounds to 1; sqrt(3) rounds to 2.
  const Neighborhood small{{{0, 0, 0}, {0, 0, 0}, {1, 1, 1}}};
  CHECK(gradient(small).sx == 4);
  CHECK(sobel_pixel(small) == 4);
}

TEST_CASE("magnitude_from_square is round-half-up sqrt with a 255 cap, exhaustively") {
  const std::uint32_t max_sq = 2 * 1020 * 1020;
  for (std::uint32_t sq = 0; sq <= max_sq; ++sq) {
    const double p = std::floor(std::sqrt(static_cast<double>(sq)) + 0.5);
    REQUIRE(magnitude_from_square(sq) == static_cast<std::uint8_t>(std::min(p, 255.0)));
  }
  CHECK(magnitude_from_square(2) == 1);
  CHECK(magnitude_from_square(3) == 2);
  CHECK(magnitude_from_square(254 * 254 + 254) == 254);
  CHECK(magnitude_from_square(254 * 254 + 255) == 255);
}

TEST_CASE("pre-clamp magnitude never exceeds 1443") {
  std::mt19937 rng(4);
  for (int i = 0; i < 20000; ++i) {
    Neighborhood m;
    for (auto &row : m) {
      for (auto &v : row) v = (rng() % 2) ? 255 : 0;
    }
    const auto g = gradient(m);
    CHECK(std::abs(g.sx) <= 1020);
    CHECK(std::abs(g.sy) <= 1020);
    CHECK(std::sqrt(double(g.sx) * g.sx + double(g.sy) * g.sy) <= 1443);
  }
}

TEST_CASE("sobel_sequential examples") {
  const GrayImage flat(17, 9, 200);
  CHECK(sobel_sequential(flat) == GrayImage(17, 9, 0));
  CHECK(sobel_sequential(GrayImage(1, 1, 99)) == GrayImage(1, 1, 0));

  GrayImage split(16, 8);
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 8; x < 16; ++x) split.at(x, y) = 255;
  }
  const auto out = sobel_sequential(split);
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 0; x < 16; ++x) {
      const bool seam = x == 7 || x == 8;
      CHECK_MESSAGE((out.at(x, y) == (seam ? 255 : 0)), "x=" << x << " y=" << y);
    }
  }
  CHECK(out.pixels().size() == split.pixels().size());
  const std::vector<std::uint8_t> px(split.pixels().begin(), split.pixels().end());
  const auto ref = oracle::sobel(px, 16, 8);
  CHECK(std::vector<std::uint8_t>(out.pixels().begin(), out.pixels().end()) == ref);
}

TEST_CASE("sobel_sequential agrees with the brute-force oracle") {
  std::mt19937 rng(8);
  for (int i = 0; i < 60; ++i) {
    const auto w = 1 + rng() % 24, h = 1 + rng() % 24;
    const auto img = random_image(rng, w, h);
    const std::vector<std::uint8_t> px(img.pixels().begin(), img.pixels().end());
    const auto out = sobel_sequential(img);
    REQUIRE(std::vector<std::uint8_t>(out.pixels().begin(), out.pixels().end()) ==
            oracle::sobel(px, static_cast<long>(w), static_cast<long>(h)));
  }
}

TEST_CASE("lane_range partitions every index exactly once") {
  for (std::size_t total : {0u, 1u, 5u, 25u, 64u, 1000u}) {
    for (std::size_t lanes = 1; lanes <= 17; ++lanes) {
      std::size_t expect = 0;
      for (std::size_t j = 0; j < lanes; ++j) {
        const auto r = lane_range(total, lanes, j);
        CHECK(r.begin == expect);
        CHECK(r.begin == j * total / lanes);
        CHECK(r.end == (j + 1) * total / lanes);
        expect = r.end;
      }
      CHECK(expect == total);
    }
  }
  // Large K: floor(jK/L) without overflow.
  const std::size_t big = std::size_t{1} << 62;
  CHECK(lane_range(big, 3, 2).end == big);
  CHECK(lane_range(big, 3, 1).begin == big / 3);
}

TEST_CASE("sobel_parallel examples") {
  std::mt19937 rng(12);
  const auto img = random_image(rng, 64, 64);
  const auto ref = sobel_sequential(img);
  CHECK(sobel_parallel(img, 1) == ref);
  for (std::size_t lanes : {2u, 3u, 8u}) CHECK(sobel_parallel(img, lanes) == ref);
  const auto five = random_image(rng, 5, 5);
  CHECK(sobel_parallel(five, 7) == sobel_sequential(five));
  CHECK(sobel_parallel(GrayImage(1, 1, 5), 16) == GrayImage(1, 1, 0));
  CHECK_THROWS_AS(sobel_parallel(img, 0), std::invalid_argument);
}

TEST_CASE("sobel_parallel equals sobel_sequential on random shapes") {
  std::mt19937 rng(21);
  for (int i = 0; i < 80; ++i) {
    const auto w = 1 + rng() % 90, h = 1 + rng() % 40;
    const auto img = random_image(rng, w, h);
    const auto ref = sobel_sequential(img);
    for (std::size_t lanes : {1u, 2u, 3u, 4u, 7u, 16u, 33u}) {
      REQUIRE(sobel_parallel(img, lanes) == ref);
    }
  }
}

TEST_CASE("inversion leaves the magnitude unchanged") {
  std::mt19937 rng(31);
  for (int i = 0; i < 30; ++i) {
    auto img = random_image(rng, 1 + rng() % 50, 1 + rng() % 50);
    auto inv = img;
    for (auto &p : inv.pixels()) p = static_cast<std::uint8_t>(255 - p);
    CHECK(sobel_sequential(img) == sobel_sequential(inv));
  }
}

TEST_CASE("shifting content shifts the interior output") {
  std::mt19937 rng(41);
  for (int i = 0; i < 30; ++i) {
    const std::size_t w = 4 + rng() % 40, h = 3 + rng() % 40;
    const auto img = random_image(rng, w, h);
    GrayImage shifted(w, h);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 1; x < w; ++x) shifted.at(x, y) = img.at(x - 1, y);
      shifted.at(0, y) = img.at(0, y);
    }
    const auto a = sobel_sequential(img);
    const auto b = sobel_sequential(shifted);
    // Pixels whose neighborhoods avoid the borders in both images.
    for (std::size_t y = 1; y + 1 < h; ++y) {
      for (std::size_t x = 2; x + 1 < w; ++x) REQUIRE(b.at(x, y) == a.at(x - 1, y));
    }
  }
}

TEST_CASE("synthetic_image is deterministic") {
  CHECK(synthetic_image(64, 48, 1) == synthetic_image(64, 48, 1));
  CHECK_FALSE(synthetic_image(64, 48, 1) == synthetic_image(64, 48, 2));
  const auto img = synthetic_image(33, 7, 9);
  CHECK(img.width() == 33);
  CHECK(img.height() == 7);
}

TEST_CASE("payload-to-payload filters match the image pipeline") {
  std::mt19937 rng(17);
  for (int i = 0; i < 60; ++i) {
    const std::size_t w = 1 + rng() % 90, h = 1 + rng() % 40;
    GrayImage img(w, h);
    for (auto &p : img.pixels()) p = static_cast<std::uint8_t>(rng());
    auto payload = write_pgm(img);
    if (i % 3 == 0) payload.push_back('x');  // trailing bytes are ignored
    const auto expected = write_pgm(sobel_sequential(img));
    REQUIRE(sobel_sequential_pgm(payload) == expected);
    REQUIRE(sobel_parallel_pgm(payload, 1 + rng() % 9) == expected);
  }
  CHECK_THROWS_AS(sobel_sequential_pgm(Bytes{'P', '2'}), PgmError);
  CHECK_THROWS_AS(sobel_parallel_pgm(write_pgm(GrayImage(2, 2)), 0), std::invalid_argument);
  const auto v = parse_pgm_view(write_pgm(GrayImage(3, 2, 7)));
  CHECK(v.width == 3);
  CHECK(v.height == 2);
  CHECK(v.raster.size() == 6);
}
