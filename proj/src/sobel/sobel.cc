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

#include "hetsched/sobel.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "hetsched/sobel_kernels.h"

namespace hetsched::sobel {

GrayImage::GrayImage(std::size_t width, std::size_t height, std::uint8_t fill)
    : width_(width), height_(height), pixels_(width * height, fill) {}

GrayImage::GrayImage(std::size_t width, std::size_t height,
                     std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != width_ * height_) {
    throw std::invalid_argument("pixel count does not match dimensions");
  }
}

namespace {

// Raw row-major raster; every entry point below funnels into these.
struct Raster {
  const std::uint8_t *px;
  std::size_t m;
  std::size_t n;
  const std::uint8_t *row(std::size_t y) const { return px + y * m; }
};

Neighborhood neighborhood_at(const Raster &img, std::size_t x, std::size_t y) {
  const auto clamp = [](std::size_t v, int delta, std::size_t limit) {
    if (delta < 0 && v == 0) return std::size_t{0};
    if (delta > 0 && v + 1 == limit) return v;
    return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(v) + delta);
  };
  Neighborhood m{};
  for (int r = 0; r < 3; ++r) {
    const auto *row = img.row(clamp(y, r - 1, img.n));
    for (int c = 0; c < 3; ++c) m[r][c] = row[clamp(x, c - 1, img.m)];
  }
  return m;
}

}  // namespace

Neighborhood neighborhood(const GrayImage &image, std::size_t x, std::size_t y) {
  if (x >= image.width() || y >= image.height()) {
    throw std::out_of_range("pixel outside image");
  }
  return neighborhood_at({image.pixels().data(), image.width(), image.height()}, x, y);
}

Gradient gradient(const Neighborhood &m) {
  static constexpr int kx[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  static constexpr int ky[3][3] = {{1, 0, -1}, {2, 0, -2}, {1, 0, -1}};
  Gradient g;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      g.sx += kx[r][c] * m[r][c];
      g.sy += ky[r][c] * m[r][c];
    }
  }
  return g;
}

std::uint8_t magnitude_from_square(std::uint32_t sq) {
  // 254.5^2 = 64770.25: anything at or above 64771 rounds to >= 255.
  if (sq >= 64771) return 255;
  auto r = static_cast<std::uint32_t>(std::sqrt(static_cast<double>(sq)));
  while (r * r > sq) --r;
  while ((r + 1) * (r + 1) <= sq) ++r;
  // sqrt(sq) >= r + 0.5  <=>  sq >= r^2 + r + 0.25  <=>  sq > r^2 + r
  return static_cast<std::uint8_t>(r + (sq > r * r + r ? 1 : 0));
}

std::uint8_t sobel_pixel(const Neighborhood &m) {
  const auto g = gradient(m);
  return magnitude_from_square(static_cast<std::uint32_t>(g.sx * g.sx + g.sy * g.sy));
}

namespace {

void sequential(const Raster &img, std::uint8_t *out) {
  for (std::size_t y = 0; y < img.n; ++y) {
    const std::uint8_t *rows[3] = {img.row(y == 0 ? 0 : y - 1), img.row(y),
                                   img.row(y + 1 == img.n ? y : y + 1)};
    for (std::size_t x = 0; x < img.m; ++x) {
      const std::size_t cols[3] = {x == 0 ? 0 : x - 1, x, x + 1 == img.m ? x : x + 1};
      Neighborhood m;
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) m[r][c] = rows[r][cols[c]];
      }
      *out++ = sobel_pixel(m);
    }
  }
}

}  // namespace

GrayImage sobel_sequential(const GrayImage &image) {
  GrayImage out(image.width(), image.height());
  sequential({image.pixels().data(), image.width(), image.height()}, out.pixels().data());
  return out;
}

IndexRange lane_range(std::size_t total, std::size_t lanes, std::size_t lane) {
  // 128-bit products keep floor(j*K/L) exact for any image size.
  const auto bound = [&](std::size_t j) {
    return static_cast<std::size_t>(static_cast<unsigned __int128>(j) * total / lanes);
  };
  return {bound(lane), bound(lane + 1)};
}

namespace {

void run_range(const Raster &img, IndexRange range, kernels::RowKernel kernel,
               std::uint8_t *out) {
  std::size_t index = range.begin;
  while (index < range.end) {
    const std::size_t y = index / img.m;
    const std::size_t x0 = index % img.m;
    const std::size_t x1 = std::min(img.m, x0 + (range.end - index));
    const auto *above = img.row(y == 0 ? 0 : y - 1);
    const auto *below = img.row(y + 1 == img.n ? y : y + 1);
    kernel(above, img.row(y), below, img.m, x0, x1, out + y * img.m);
    index += x1 - x0;
  }
}

void parallel(const Raster &img, std::size_t lane_count, std::uint8_t *out) {
  if (lane_count == 0) throw std::invalid_argument("lane_count must be >= 1");
  const std::size_t total = img.m * img.n;
  const auto kernel = kernels::kernel_for(kernels::best_isa());
  std::vector<std::jthread> lanes;
  lanes.reserve(lane_count);
  for (std::size_t j = 1; j < lane_count; ++j) {
    const auto range = lane_range(total, lane_count, j);
    if (range.begin == range.end) continue;
    lanes.emplace_back([&img, range, kernel, out] { run_range(img, range, kernel, out); });
  }
  run_range(img, lane_range(total, lane_count, 0), kernel, out);
}

// Allocates the canonical P5 output and returns a pointer to its raster.
std::uint8_t *pgm_output(Bytes &buf, std::size_t m, std::size_t n) {
  const std::string header = "P5\n" + std::to_string(m) + " " + std::to_string(n) + "\n255\n";
  buf.resize(header.size() + m * n);
  std::copy(header.begin(), header.end(), buf.begin());
  return buf.data() + header.size();
}

}  // namespace

GrayImage sobel_parallel(const GrayImage &image, std::size_t lane_count) {
  if (lane_count == 0) throw std::invalid_argument("lane_count must be >= 1");
  GrayImage out(image.width(), image.height());
  parallel({image.pixels().data(), image.width(), image.height()}, lane_count,
           out.pixels().data());
  return out;
}

Bytes sobel_sequential_pgm(std::span<const std::uint8_t> payload) {
  const auto v = parse_pgm_view(payload);
  Bytes out;
  sequential({v.raster.data(), v.width, v.height}, pgm_output(out, v.width, v.height));
  return out;
}

Bytes sobel_parallel_pgm(std::span<const std::uint8_t> payload, std::size_t lane_count) {
  if (lane_count == 0) throw std::invalid_argument("lane_count must be >= 1");
  const auto v = parse_pgm_view(payload);
  Bytes out;
  parallel({v.raster.data(), v.width, v.height}, lane_count, pgm_output(out, v.width, v.height));
  return out;
}

GrayImage synthetic_image(std::size_t width, std::size_t height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GrayImage img(width, height);
  const auto w = static_cast<double>(width);
  const auto h = static_cast<double>(height);
  const double cx = w * (0.25 + (rng() % 50) / 100.0);
  const double cy = h * (0.25 + (rng() % 50) / 100.0);
  const double radius = std::min(w, h) * 0.3;
  const std::size_t rx0 = rng() % width, ry0 = rng() % height;
  const std::size_t rx1 = rx0 + width / 4, ry1 = ry0 + height / 5;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      int v = static_cast<int>(160.0 * x / w + 60.0 * y / h);
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy < radius * radius) v = 255 - v;
      if (x >= rx0 && x < rx1 && y >= ry0 && y < ry1) v = 20;
      v += static_cast<int>(rng() % 33) - 16;
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    }
  }
  return img;
}

}  // namespace hetsched::sobel
