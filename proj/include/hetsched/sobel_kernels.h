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

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace hetsched::sobel::kernels {

// Row-segment kernels. Each computes output pixels [x0, x1) of one row given
// pointers to the rows above, at and below it (already clamped at the image
// top/bottom). Columns clamp to [0, width) internally. All variants produce
// identical bytes.

using RowKernel = void (*)(const std::uint8_t *above, const std::uint8_t *row,
                           const std::uint8_t *below, std::size_t width, std::size_t x0,
                           std::size_t x1, std::uint8_t *out);

void row_scalar(const std::uint8_t *above, const std::uint8_t *row,
                const std::uint8_t *below, std::size_t width, std::size_t x0,
                std::size_t x1, std::uint8_t *out);

#if defined(HETSCHED_HAVE_AVX2)
void row_avx2(const std::uint8_t *above, const std::uint8_t *row,
              const std::uint8_t *below, std::size_t width, std::size_t x0,
              std::size_t x1, std::uint8_t *out);
/// Vector form of magnitude_from_square, exposed for exhaustive checks.
void magnitude_avx2(const std::uint32_t *sq, std::size_t count, std::uint8_t *out);
#endif

enum class Isa { kScalar, kAvx2 };

std::string_view to_string(Isa isa);

/// True when the running CPU can execute the given variant.
bool supported(Isa isa);
/// Best supported variant; HETSCHED_FORCE_SCALAR=1 in the environment pins
/// the scalar kernel.
Isa best_isa();
RowKernel kernel_for(Isa isa);

}  // namespace hetsched::sobel::kernels
