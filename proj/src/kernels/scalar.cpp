// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "usd/kernels/kernels.hpp"

namespace usd::kernels::scalar {
namespace {

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
          double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] = crow[j] + av * brow[j];
    }
  }
}

void add(std::size_t n, const double* x, const double* y, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(std::size_t n, const double* x, const double* y, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void adagrad(std::size_t n, double lr, double decay, double eps, const double* g, double* acc,
             double* theta) {
  for (std::size_t i = 0; i < n; ++i) {
    const double a = decay * acc[i] + g[i] * g[i];
    acc[i] = a;
    theta[i] = theta[i] - (lr * g[i]) / (std::sqrt(a) + eps);
  }
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{gemm, add, mul, axpy, adagrad};
  return t;
}

}  // namespace usd::kernels::scalar
