// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include <limits>

#include "advcat/kernels.hpp"

namespace advcat::kernels::scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void sub_scalar(const double* x, double c, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] - c;
}

double max(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

}  // namespace advcat::kernels::scalar
