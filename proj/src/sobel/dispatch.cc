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

#include <cstdlib>
#include <cstring>

#include "hetsched/sobel_kernels.h"

namespace hetsched::sobel::kernels {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(HETSCHED_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa best_isa() {
  static const Isa chosen = [] {
    const char *force = std::getenv("HETSCHED_FORCE_SCALAR");
    if (force != nullptr && std::strcmp(force, "1") == 0) return Isa::kScalar;
    return supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
  }();
  return chosen;
}

RowKernel kernel_for(Isa isa) {
#if defined(HETSCHED_HAVE_AVX2)
  if (isa == Isa::kAvx2 && supported(Isa::kAvx2)) return &row_avx2;
#endif
  (void)isa;
  return &row_scalar;
}

}  // namespace hetsched::sobel::kernels
