// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Data-parallel inner loops used by the tensor ops and the optimizer.
//
// Each kernel has a portable scalar reference and, on x86-64, an AVX2
// variant. The variant is chosen once at startup from CPU support and the
// USD_KERNELS environment variable (scalar | avx2 | auto). Variants vectorize
// across independent output elements only and never reorder a reduction, so
// every variant produces bit-identical results to the scalar reference.

#pragma once

#include <cstddef>
#include <string_view>

namespace usd::kernels {

enum class Backend { scalar, avx2 };

struct KernelTable {
  // c[m,n] = a[m,k] * b[k,n], row-major. Each output accumulates over k in
  // increasing order starting from +0.0.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
               double* c);
  // out[i] = x[i] + y[i]
  void (*add)(std::size_t n, const double* x, const double* y, double* out);
  // out[i] = x[i] * y[i]
  void (*mul)(std::size_t n, const double* x, const double* y, double* out);
  // y[i] = y[i] + alpha * x[i]
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  // acc = decay*acc + g*g;  theta = theta - lr*g / (sqrt(acc) + eps)
  void (*adagrad)(std::size_t n, double lr, double decay, double eps, const double* g,
                  double* acc, double* theta);
};

namespace scalar {
const KernelTable& table();
}

#if defined(USD_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif

bool supported(Backend b);
const KernelTable& table(Backend b);
std::string_view name(Backend b);

// Currently selected variant.
const KernelTable& active();
Backend active_backend();

// Force a variant (tests, benchmarking). Throws UsageError if unsupported.
void select(Backend b);

}  // namespace usd::kernels
