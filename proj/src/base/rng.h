// base/rng.h

// Copyright 2026  cmkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CMKIT_BASE_RNG_H_
#define CMKIT_BASE_RNG_H_

#include <random>
#include <string>

#include "base/common.h"

namespace cmkit {

// Deterministic random stream.  Every stochastic component takes one of
// these explicitly; there is no hidden global state.  Streams for parallel
// or per-purpose use are derived with Fork(), which mixes a label into the
// seed so sibling streams never collide.
class Rng {
 public:
  explicit Rng(uint64 seed) : engine_(seed), seed_(seed) {}

  uint64 seed() const { return seed_; }

  // Uniform real in [lo, hi).
  real Uniform(real lo, real hi) {
    std::uniform_real_distribution<real> d(lo, hi);
    return d(engine_);
  }

  // Uniform integer in [lo, hi] inclusive.
  int64 UniformInt(int64 lo, int64 hi) {
    std::uniform_int_distribution<int64> d(lo, hi);
    return d(engine_);
  }

  real Gaussian(real mean = 0.0, real stddev = 1.0) {
    std::normal_distribution<real> d(mean, stddev);
    return d(engine_);
  }

  bool Bernoulli(real p) { return Uniform(0.0, 1.0) < p; }

  // Child stream seeded from (seed, label, index); deterministic and
  // independent of how much this stream has already been consumed.
  Rng Fork(const std::string &label, uint64 index = 0) const {
    uint64 h = seed_;
    h = Mix(h, 0x9e3779b97f4a7c15ull);
    for (char c : label) h = Mix(h, static_cast<uint64>(c) + 0x100ull);
    h = Mix(h, index + 0x517cc1b727220a95ull);
    return Rng(h);
  }

  std::mt19937_64 &engine() { return engine_; }

 private:
  static uint64 Mix(uint64 h, uint64 v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    return h;
  }

  std::mt19937_64 engine_;
  uint64 seed_;
};

}  // namespace cmkit

#endif  // CMKIT_BASE_RNG_H_
