// Copyright 2026 The balanced-mc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace bmc {

// Counter-based generator: the i-th draw of a stream is a pure function of
// (key, i), so replicate streams never depend on scheduling order.
//
// Draw layout is SplitMix64 applied to key' + (i + 1) * golden, where key'
// is the SplitMix64 mix of the user key. Uniforms use the top 53 bits.
// Normals use Box-Muller (cosine branch) on two consecutive counters, so a
// normal stream advances the counter by 2 per draw.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(mix(key)) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix(key_ + (counter + 1) * kGolden);
  }

  /// Uniform on [0, 1).
  constexpr double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1).
  constexpr double uniform_open(std::uint64_t counter) const noexcept {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal from counters 2c and 2c + 1.
  double normal(std::uint64_t c) const noexcept {
    const double u1 = uniform_open(2 * c);
    const double u2 = uniform(2 * c + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
};

/// Sequential view over a CounterRng starting at a fixed counter offset.
class RngStream {
 public:
  constexpr RngStream(CounterRng rng, std::uint64_t offset = 0) noexcept
      : rng_(rng), next_(offset) {}

  constexpr double uniform() noexcept { return rng_.uniform(next_++); }
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }
  /// Consumes two counters.
  double normal() noexcept {
    const double u1 = rng_.uniform_open(next_);
    const double u2 = rng_.uniform(next_ + 1);
    next_ += 2;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept {
    const auto x = rng_.bits(next_++);
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(x) * n) >> 64);
  }
  constexpr std::uint64_t position() const noexcept { return next_; }

 private:
  CounterRng rng_;
  std::uint64_t next_;
};

}  // namespace bmc
