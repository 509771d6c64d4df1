#pragma once

#include <cstdint>
#include <random>

namespace epinet {

// Seedable, splittable random stream. Every stochastic component receives its
// own stream, derived from a root seed and an integer path; derivation uses
// the stream's key (not its generator state), so the stream tree is fixed by
// the root seed alone and drawing from one stream never affects another.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(seed), gen_(mix(seed, 0x6a09e667f3bcc909ull)) {}

  RngStream derive(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
    return RngStream(mix(mix(mix(key_, a + 1), b + 1), c + 1), FromKey{});
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }

  // Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_);
  }

  double exponential(double rate) { return std::exponential_distribution<double>(rate)(gen_); }

  double normal(double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(gen_);
  }

  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(gen_);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return gen_; }

 private:
  struct FromKey {};
  RngStream(std::uint64_t key, FromKey) : key_(key), gen_(mix(key, 0x6a09e667f3bcc909ull)) {}

  // splitmix64 finalizer over a combined key
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::mt19937_64 gen_;
};

}  // namespace epinet
