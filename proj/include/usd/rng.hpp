// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace usd {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream seed for (master seed, purpose tag, entity id). Streams
// never depend on generation order, so per-user work can run in any order.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t id) {
  return splitmix64(splitmix64(splitmix64(master) ^ tag) ^ id);
}

namespace stream {
inline constexpr std::uint64_t kUsers = 0x55534552;     // "USER"
inline constexpr std::uint64_t kItems = 0x4954454d;     // "ITEM"
inline constexpr std::uint64_t kSimulate = 0x53494d55;  // "SIMU"
inline constexpr std::uint64_t kInit = 0x494e4954;      // "INIT"
inline constexpr std::uint64_t kShuffle = 0x53485546;   // "SHUF"
}  // namespace stream

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }

  double beta(double a, double b) {
    const double x = std::gamma_distribution<double>(a, 1.0)(engine_);
    const double y = std::gamma_distribution<double>(b, 1.0)(engine_);
    return x / (x + y);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace usd
