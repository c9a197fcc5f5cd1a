// Copyright 2026 PI-Obfuscate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef PIOBF_RNG_HPP_
#define PIOBF_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace piobf {

// Counter-based splittable generator. Each draw is a stateless hash of
// (seed, stream_key, counter), so independent streams never couple and a
// (seed, stream_key) pair always reproduces the same sequence bit for bit.
// The per-draw function is the splitmix64 output stage, which passes the
// usual statistical batteries when driven by a Weyl counter.
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t stream_key)
      : base_(mix(seed + 0x9E3779B97F4A7C15ULL * mix(stream_key + 0x6A09E667F3BCC909ULL))) {}

  // Derives a child stream; children with distinct keys are independent.
  CounterRng split(uint64_t stream_key) const {
    return CounterRng(base_, stream_key);
  }

  uint64_t next_u64() {
    counter_ += 0x9E3779B97F4A7C15ULL;
    return mix(base_ ^ counter_);
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); never returns an endpoint.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Draws two uniforms per call so the
  // stream position is a pure function of the call count.
  double normal() {
    double u1 = uniform_open();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Laplace with the given scale.
  double laplace(double scale) {
    double u = uniform_open() - 0.5;
    return -scale * (u < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::fabs(u));
  }

  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  // Gamma(shape, rate) for shape >= 1: Marsaglia-Tsang rejection with the
  // quartic squeeze. Exactness is asserted by the KS acceptance test rather
  // than assumed.
  double gamma(double shape, double rate) {
    if (shape < 1.0 || rate <= 0.0) throw std::invalid_argument("gamma: shape < 1 or rate <= 0");
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

 private:
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  uint64_t base_;
  uint64_t counter_ = 0;
};

}  // namespace piobf

#endif  // PIOBF_RNG_HPP_
