// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dense double-precision kernels behind the softmax models. Every routine has
// a portable scalar reference; x86-64 builds add AVX2+FMA variants chosen at
// runtime from CPUID. Set ADVCAT_ISA=scalar to force the reference path.

#include <cstddef>
#include <span>

namespace advcat::kernels {

enum class Isa { scalar, avx2 };

const char* to_string(Isa isa);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y[i] = x[i] - c
  void (*sub_scalar)(const double* x, double c, double* y, std::size_t n);
  double (*max)(const double* x, std::size_t n);
};

namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void sub_scalar(const double* x, double c, double* y, std::size_t n);
double max(const double* x, std::size_t n);
}  // namespace scalar

#if ADVCAT_HAS_AVX2_TU
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void sub_scalar(const double* x, double c, double* y, std::size_t n);
double max(const double* x, std::size_t n);
}  // namespace avx2
#endif

bool supported(Isa isa);

/// Table for a specific ISA; throws std::invalid_argument when unsupported.
const KernelTable& table(Isa isa);

/// Best supported table, resolved once per process.
const KernelTable& active();

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

}  // namespace advcat::kernels
