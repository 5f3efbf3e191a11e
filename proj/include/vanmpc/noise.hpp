// Copyright 2026 The vanmpc Authors
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

#include "vanmpc/types.hpp"

namespace vanmpc {

/// Counter-based standard-normal stream: draw k depends only on (key, k), so
/// every run seeded with the same key sees the same disturbance sequence
/// regardless of how many draws other runs consumed.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t key) : key_(mix(key)) {}

  double at(std::uint64_t counter) const {
    // Box-Muller on two independent uniforms in (0, 1).
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  double uniform(std::uint64_t c) const {
    const std::uint64_t bits = mix(key_ ^ mix(c));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t key_;
};

/// Independent streams for the two command channels.
class ChannelNoise {
 public:
  explicit ChannelNoise(std::uint64_t seed)
      : v_(NormalStream::mix(seed) ^ 0x1ULL), q_(NormalStream::mix(seed) ^ 0x2ULL) {}

  Vec2 draw(std::uint64_t step) const { return {v_.at(step), q_.at(step)}; }

 private:
  NormalStream v_;
  NormalStream q_;
};

}  // namespace vanmpc
