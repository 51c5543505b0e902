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

#include <immintrin.h>

#include <algorithm>

#include "hetsched/sobel_kernels.h"

namespace hetsched::sobel::kernels {

namespace {

inline __m256i widen8(const std::uint8_t *p) {
  return _mm256_cvtepu8_epi32(_mm_loadl_epi64(reinterpret_cast<const __m128i *>(p)));
}

// round(sqrt(sq)) clamped to 255 for 8 lanes. sq < 2^24 is exact in float
// and IEEE sqrt is correctly rounded; for sq < 65536 the true root is at
// least 4.8e-4 away from any half-integer, far above float error there, so
// round-to-nearest on the float root matches exact half-up rounding.
inline __m256i magnitude8(__m256i sq) {
  const __m256 root = _mm256_sqrt_ps(_mm256_cvtepi32_ps(sq));
  return _mm256_min_epi32(_mm256_cvtps_epi32(root), _mm256_set1_epi32(255));
}

inline void store8(std::uint8_t *dst, __m256i v) {
  const __m256i words = _mm256_packus_epi32(v, v);
  const __m256i ordered = _mm256_permute4x64_epi64(words, 0b00001000);
  const __m128i bytes = _mm_packus_epi16(_mm256_castsi256_si128(ordered),
                                         _mm256_castsi256_si128(ordered));
  _mm_storel_epi64(reinterpret_cast<__m128i *>(dst), bytes);
}

}  // namespace

void magnitude_avx2(const std::uint32_t *sq, std::size_t count, std::uint8_t *out) {
  std::size_t i = 0;
  for (; i + 8 <= count; i += 8) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i *>(sq + i));
    store8(out + i, magnitude8(v));
  }
  if (i < count) {
    alignas(32) std::uint32_t tail[8] = {};
    std::uint8_t res[8];
    std::copy(sq + i, sq + count, tail);
    store8(res, magnitude8(_mm256_load_si256(reinterpret_cast<const __m256i *>(tail))));
    std::copy(res, res + (count - i), out + i);
  }
}

void row_avx2(const std::uint8_t *above, const std::uint8_t *row,
              const std::uint8_t *below, std::size_t width, std::size_t x0,
              std::size_t x1, std::uint8_t *out) {
  // Column 0 and column width-1 clamp their neighbors; the scalar kernel
  // owns them along with any tail shorter than one vector.
  const std::size_t lo = std::max<std::size_t>(x0, 1);
  const std::size_t hi = width >= 1 ? std::min(x1, width - 1) : 0;
  if (lo >= hi) {
    row_scalar(above, row, below, width, x0, x1, out);
    return;
  }
  row_scalar(above, row, below, width, x0, lo, out);

  std::size_t x = lo;
  for (; x + 8 <= hi; x += 8) {
    const __m256i a0 = widen8(above + x - 1), a1 = widen8(above + x), a2 = widen8(above + x + 1);
    const __m256i b0 = widen8(row + x - 1), b2 = widen8(row + x + 1);
    const __m256i c0 = widen8(below + x - 1), c1 = widen8(below + x), c2 = widen8(below + x + 1);

    const __m256i top = _mm256_add_epi32(_mm256_add_epi32(a0, a2), _mm256_slli_epi32(a1, 1));
    const __m256i bot = _mm256_add_epi32(_mm256_add_epi32(c0, c2), _mm256_slli_epi32(c1, 1));
    const __m256i left = _mm256_add_epi32(_mm256_add_epi32(a0, c0), _mm256_slli_epi32(b0, 1));
    const __m256i right = _mm256_add_epi32(_mm256_add_epi32(a2, c2), _mm256_slli_epi32(b2, 1));

    const __m256i sx = _mm256_sub_epi32(bot, top);
    const __m256i sy = _mm256_sub_epi32(left, right);
    const __m256i sq = _mm256_add_epi32(_mm256_mullo_epi32(sx, sx), _mm256_mullo_epi32(sy, sy));
    store8(out + x, magnitude8(sq));
  }
  row_scalar(above, row, below, width, x, x1, out);
}

}  // namespace hetsched::sobel::kernels
