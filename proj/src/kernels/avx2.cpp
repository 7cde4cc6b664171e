// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 and only called when the CPU reports AVX2.
// Multiplies and adds stay separate instructions (no FMA) so every lane
// rounds exactly like the scalar reference.

#include <immintrin.h>

#include <cmath>

#include "usd/kernels/kernels.hpp"

namespace usd::kernels::avx2 {
namespace {

void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
          double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    std::size_t j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256d c0 = _mm256_setzero_pd();
      __m256d c1 = _mm256_setzero_pd();
      __m256d c2 = _mm256_setzero_pd();
      __m256d c3 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d av = _mm256_set1_pd(arow[p]);
        const double* brow = b + p * n + j;
        c0 = _mm256_add_pd(c0, _mm256_mul_pd(av, _mm256_loadu_pd(brow)));
        c1 = _mm256_add_pd(c1, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 4)));
        c2 = _mm256_add_pd(c2, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 8)));
        c3 = _mm256_add_pd(c3, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 12)));
      }
      _mm256_storeu_pd(crow + j, c0);
      _mm256_storeu_pd(crow + j + 4, c1);
      _mm256_storeu_pd(crow + j + 8, c2);
      _mm256_storeu_pd(crow + j + 12, c3);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        c0 = _mm256_add_pd(c0, _mm256_mul_pd(_mm256_set1_pd(arow[p]), _mm256_loadu_pd(b + p * n + j)));
      }
      _mm256_storeu_pd(crow + j, c0);
    }
    for (; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s = s + arow[p] * b[p * n + j];
      crow[j] = s;
    }
  }
}

void add(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yv = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(yv, _mm256_mul_pd(av, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void adagrad(std::size_t n, double lr, double decay, double eps, const double* g, double* acc,
             double* theta) {
  const __m256d lrv = _mm256_set1_pd(lr);
  const __m256d dv = _mm256_set1_pd(decay);
  const __m256d ev = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    const __m256d a =
        _mm256_add_pd(_mm256_mul_pd(dv, _mm256_loadu_pd(acc + i)), _mm256_mul_pd(gv, gv));
    _mm256_storeu_pd(acc + i, a);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(lrv, gv), _mm256_add_pd(_mm256_sqrt_pd(a), ev));
    _mm256_storeu_pd(theta + i, _mm256_sub_pd(_mm256_loadu_pd(theta + i), step));
  }
  for (; i < n; ++i) {
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

}  // namespace usd::kernels::avx2
