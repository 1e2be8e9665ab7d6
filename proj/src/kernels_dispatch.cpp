// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <stdexcept>
#include <string_view>

#include "advcat/kernels.hpp"

namespace advcat::kernels {

namespace {

constexpr KernelTable kScalar{Isa::scalar, scalar::dot, scalar::axpy, scalar::sub_scalar,
                              scalar::max};
#if ADVCAT_HAS_AVX2_TU
constexpr KernelTable kAvx2{Isa::avx2, avx2::dot, avx2::axpy, avx2::sub_scalar, avx2::max};
#endif

const KernelTable& resolve() {
  if (const char* env = std::getenv("ADVCAT_ISA"); env && std::string_view(env) == "scalar") {
    return kScalar;
  }
  return supported(Isa::avx2) ? table(Isa::avx2) : kScalar;
}

}  // namespace

const char* to_string(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool supported(Isa isa) {
  if (isa == Isa::scalar) return true;
#if ADVCAT_HAS_AVX2_TU && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& table(Isa isa) {
  if (!supported(isa)) {
    throw std::invalid_argument(std::string("kernel ISA not supported: ") + to_string(isa));
  }
#if ADVCAT_HAS_AVX2_TU
  if (isa == Isa::avx2) return kAvx2;
#endif
  return kScalar;
}

const KernelTable& active() {
  static const KernelTable& t = resolve();
  return t;
}

}  // namespace advcat::kernels
