#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "tsm/tensor.hpp"

namespace tsm {

// Platform-stable generator. std::mt19937_64's output sequence is fixed by
// the standard; the distributions below avoid std::*_distribution, whose
// algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; one sample per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::uint64_t next() { return engine_(); }
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  Tensor uniform_tensor(Tensor::Dims dims, double lo, double hi) {
    Tensor t(std::move(dims));
    for (auto& v : t.values()) v = static_cast<float>(uniform(lo, hi));
    return t;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tsm
