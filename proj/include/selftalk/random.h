// Copyright 2026 The Selftalk Authors.
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

#ifndef SELFTALK_RANDOM_H_
#define SELFTALK_RANDOM_H_

#include <cstdint>
#include <random>
#include <vector>

namespace selftalk {

// Seeded generator with platform-independent derived distributions. The
// standard library distributions are implementation-defined, so all draws
// go through this class to keep runs bit-reproducible across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). n must be positive.
  uint64_t Below(uint64_t n);

  // Standard normal via Box-Muller.
  double Gaussian();

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(Below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer, used to derive independent stream seeds.
uint64_t MixSeed(uint64_t seed, uint64_t stream);

}  // namespace selftalk

#endif  // SELFTALK_RANDOM_H_
