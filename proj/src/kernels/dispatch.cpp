// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "usd/error.hpp"
#include "usd/kernels/kernels.hpp"

namespace usd::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(USD_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend initial_backend() {
  const char* env = std::getenv("USD_KERNELS");
  const std::string want = env ? env : "auto";
  if (want == "scalar") return Backend::scalar;
  if (want == "avx2" && !cpu_has_avx2()) {
    throw UsageError("USD_KERNELS=avx2 requested but this CPU or build lacks AVX2");
  }
  if (want != "avx2" && want != "auto") {
    throw UsageError("USD_KERNELS must be one of scalar, avx2, auto; got '" + want + "'");
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{initial_backend()};
  return b;
}

}  // namespace

bool supported(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return cpu_has_avx2();
  }
  return false;
}

const KernelTable& table(Backend b) {
  if (!supported(b)) throw UsageError("kernel backend '" + std::string(name(b)) + "' unsupported");
#if defined(USD_HAVE_AVX2)
  if (b == Backend::avx2) return avx2::table();
#endif
  return scalar::table();
}

std::string_view name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

const KernelTable& active() { return table(current().load(std::memory_order_relaxed)); }

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void select(Backend b) {
  if (!supported(b)) throw UsageError("kernel backend '" + std::string(name(b)) + "' unsupported");
  current().store(b, std::memory_order_relaxed);
}

}  // namespace usd::kernels
