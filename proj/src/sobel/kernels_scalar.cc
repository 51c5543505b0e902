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
#include "hetsched/sobel_kernels.h"

namespace hetsched::sobel::kernels {

void row_scalar(const std::uint8_t *above, const std::uint8_t *row,
                const std::uint8_t *below, std::size_t width, std::size_t x0,
                std::size_t x1, std::uint8_t *out) {
  for (std::size_t x = x0; x < x1; ++x) {
    const std::size_t l = x == 0 ? 0 : x - 1;
    const std::size_t r = x + 1 == width ? x : x + 1;
    const int sx = (below[l] + 2 * below[x] + below[r]) - (above[l] + 2 * above[x] + above[r]);
    const int sy = (above[l] + 2 * row[l] + below[l]) - (above[r] + 2 * row[r] + below[r]);
    out[x] = magnitude_from_square(static_cast<std::uint32_t>(sx * sx + sy * sy));
  }
}

}  // namespace hetsched::sobel::kernels
