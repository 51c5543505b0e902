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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hetsched/core.h"

namespace hetsched::sobel {

/// 8-bit grayscale raster, row-major, width m by height n.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, std::uint8_t fill = 0);
  GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }

  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
  std::uint8_t &at(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }
  const std::uint8_t *row(std::size_t y) const { return pixels_.data() + y * width_; }
  std::uint8_t *row(std::size_t y) { return pixels_.data() + y * width_; }

  bool operator==(const GrayImage &) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

enum class PgmErrorCode { kUnsupportedFormat, kBadHeader, kUnsupportedMaxval, kShortRaster };

std::string_view to_string(PgmErrorCode code);

class PgmError : public std::runtime_error {
 public:
  PgmError(PgmErrorCode code, const std::string &detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
  PgmErrorCode code() const { return code_; }

 private:
  PgmErrorCode code_;
};

/// Binary PGM ("P5") with maxval 255. Header tokens may be separated by any
/// whitespace and interleaved with '#' comments; a single whitespace byte
/// separates maxval from the raster. Trailing bytes after the raster are
/// ignored.
GrayImage parse_pgm(std::span<const std::uint8_t> bytes);
/// Canonical form: "P5\n<m> <n>\n255\n" followed by the raster.
Bytes write_pgm(const GrayImage &image);

/// Dimensions and raster of a P5 buffer; the raster aliases the input.
struct PgmView {
  std::size_t width = 0;
  std::size_t height = 0;
  std::span<const std::uint8_t> raster;
};

/// Same validation as parse_pgm, without copying the raster.
PgmView parse_pgm_view(std::span<const std::uint8_t> bytes);

using Neighborhood = std::array<std::array<int, 3>, 3>;

/// M[r][c] = img(clamp(x+c-1), clamp(y+r-1)); out-of-range neighbors take
/// the nearest edge pixel. Throws std::out_of_range for (x, y) outside the
/// image.
Neighborhood neighborhood(const GrayImage &image, std::size_t x, std::size_t y);

struct Gradient {
  int sx = 0;
  int sy = 0;
};

/// Elementwise products with the two 3x3 kernels, summed:
///   Kx = [[-1,-2,-1],[0,0,0],[1,2,1]]   Ky = [[1,0,-1],[2,0,-2],[1,0,-1]]
Gradient gradient(const Neighborhood &m);

/// round-half-up(sqrt(sq)) clamped to 255, computed exactly on integers.
std::uint8_t magnitude_from_square(std::uint32_t sq);

/// Edge magnitude of one neighborhood.
std::uint8_t sobel_pixel(const Neighborhood &m);

/// Reference executor: every pixel through neighborhood() and sobel_pixel(),
/// in row-major order.
GrayImage sobel_sequential(const GrayImage &image);

/// Splits the K = m*n pixel indices into `lane_count` contiguous ranges
/// [floor(jK/L), floor((j+1)K/L)) and evaluates each on its own thread with
/// the fastest row kernel the CPU supports. Byte-identical to
/// sobel_sequential for every input and lane count.
GrayImage sobel_parallel(const GrayImage &image, std::size_t lane_count);

/// P5 payload in, canonical P5 out, filtering straight into the output
/// buffer. Equal to write_pgm(sobel_sequential(parse_pgm(payload))) and the
/// parallel counterpart.
Bytes sobel_sequential_pgm(std::span<const std::uint8_t> payload);
Bytes sobel_parallel_pgm(std::span<const std::uint8_t> payload, std::size_t lane_count);

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Lane j's share of K indices split across L lanes.
IndexRange lane_range(std::size_t total, std::size_t lanes, std::size_t lane);

/// Deterministic test/bench image: smooth gradients, a few hard-edged
/// shapes and seeded noise.
GrayImage synthetic_image(std::size_t width, std::size_t height, std::uint64_t seed);

}  // namespace hetsched::sobel
