#pragma once

#include <cstdint>
#include <random>

#include "symfs/linalg.hpp"

namespace symfs {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent seed for stream `stream` of `base` (e.g. (seed, epoch) or (seed, repeat)).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  double normal(double mean = 0.0, double stddev = 1.0) { return std::normal_distribution<double>(mean, stddev)(gen_); }

  VectorD uniform_vector(std::size_t d, double lo = 0.0, double hi = 1.0) {
    VectorD v(d);
    for (double& x : v) x = uniform(lo, hi);
    return v;
  }
  VectorD normal_vector(std::size_t d) {
    VectorD v(d);
    for (double& x : v) x = normal();
    return v;
  }
  /// Uniformly distributed unit vector.
  VectorD unit_vector(std::size_t d) {
    while (true) {
      VectorD v = normal_vector(d);
      const double len = norm(v);
      if (len > 1e-6) return (1.0 / len) * std::move(v);
    }
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace symfs
