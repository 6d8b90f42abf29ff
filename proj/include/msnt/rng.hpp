#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace msnt {

// Seeded random source used throughout the engine. All draws are derived
// from a Mersenne Twister stream so a run is fully reproducible from its
// 64-bit seed. Categorical draws use inverse-CDF over the unnormalized
// weight vector with a single 64-bit uniform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be >= 1.
  std::uint32_t uniform_int(std::uint32_t n) {
    return static_cast<std::uint32_t>(uniform01() * static_cast<double>(n));
  }

  // Inverse-CDF draw over unnormalized non-negative weights. At least one
  // weight must be positive.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double r = uniform01() * total;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] > 0.0) last_positive = i;
      r -= weights[i];
      if (r < 0.0 && weights[i] > 0.0) return i;
    }
    return last_positive;  // float round-off pushed r past the end
  }

  double gamma(double shape) {
    return std::gamma_distribution<double>(shape, 1.0)(engine_);
  }

  // Symmetric Dirichlet draw via normalized gammas. Entries are floored at
  // a tiny positive value so every probability stays strictly positive even
  // for very sparse concentrations.
  void dirichlet(std::span<double> out, double concentration) {
    double sum = 0.0;
    for (double& v : out) {
      v = gamma(concentration);
      if (v < 1e-300) v = 1e-300;
      sum += v;
    }
    for (double& v : out) v /= sum;
  }

  std::vector<double> dirichlet(std::size_t n, double concentration) {
    std::vector<double> out(n);
    dirichlet(std::span<double>(out), concentration);
    return out;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace msnt
