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

#include <cctype>
#include <limits>
#include <string>

#include "hetsched/sobel.h"

namespace hetsched::sobel {

std::string_view to_string(PgmErrorCode code) {
  switch (code) {
    case PgmErrorCode::kUnsupportedFormat:
      return "UNSUPPORTED_FORMAT";
    case PgmErrorCode::kBadHeader:
      return "BAD_HEADER";
    case PgmErrorCode::kUnsupportedMaxval:
      return "UNSUPPORTED_MAXVAL";
    case PgmErrorCode::kShortRaster:
      return "SHORT_RASTER";
  }
  return "UNKNOWN";
}

namespace {

class HeaderCursor {
 public:
  explicit HeaderCursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t number(const char *what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw PgmError(PgmErrorCode::kBadHeader, std::string("expected ") + what);
    }
    std::uint64_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > std::numeric_limits<std::uint32_t>::max()) {
        throw PgmError(PgmErrorCode::kBadHeader, std::string(what) + " too large");
      }
      ++pos_;
    }
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }
  bool at_space() const { return pos_ < bytes_.size() && std::isspace(bytes_[pos_]); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

PgmView parse_pgm_view(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw PgmError(PgmErrorCode::kUnsupportedFormat, "not a PNM file");
  }
  if (bytes[1] != '5') {
    throw PgmError(PgmErrorCode::kUnsupportedFormat,
                   std::string("only binary P5 is supported, got P") +
                       static_cast<char>(bytes[1]));
  }
  HeaderCursor cur(bytes.subspan(2));
  if (!cur.at_space() && bytes.size() > 2 && bytes[2] != '#') {
    throw PgmError(PgmErrorCode::kBadHeader, "missing whitespace after magic");
  }
  const auto width = cur.number("width");
  const auto height = cur.number("height");
  const auto maxval = cur.number("maxval");
  if (width == 0 || height == 0) {
    throw PgmError(PgmErrorCode::kBadHeader, "zero image dimension");
  }
  if (maxval != 255) {
    throw PgmError(PgmErrorCode::kUnsupportedMaxval,
                   "maxval " + std::to_string(maxval) + " (only 255 supported)");
  }
  if (!cur.at_space()) {
    throw PgmError(PgmErrorCode::kBadHeader, "missing whitespace before raster");
  }
  cur.advance();

  const std::size_t offset = 2 + cur.pos();
  const std::uint64_t need = width * height;
  const std::size_t have = bytes.size() - offset;
  if (have < need) {
    throw PgmError(PgmErrorCode::kShortRaster, "raster has " + std::to_string(have) +
                                                   " bytes, header needs " +
                                                   std::to_string(need));
  }
  return {width, height, bytes.subspan(offset, need)};
}

GrayImage parse_pgm(std::span<const std::uint8_t> bytes) {
  const auto v = parse_pgm_view(bytes);
  return GrayImage(v.width, v.height, std::vector<std::uint8_t>(v.raster.begin(), v.raster.end()));
}

Bytes write_pgm(const GrayImage &image) {
  const std::string header = "P5\n" + std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + "\n255\n";
  Bytes out;
  out.reserve(header.size() + image.size());
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), image.pixels().begin(), image.pixels().end());
  return out;
}

}  // namespace hetsched::sobel
