#pragma once

#include "exhier/rational.hpp"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <string_view>

namespace exhier {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(seed ^ splitmix64(a)) + b);
}

inline std::uint64_t default_seed() {
  if (const char* env = std::getenv("EXHIER_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return v;
  }
  return 20240917ULL;
}

// Sequential stream over mt19937_64; doubles are built from raw bits so the
// output does not depend on the library's distribution implementations.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : eng_(seed) {}
  Stream(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0)
      : eng_(derive_seed(seed, hash_tag(tag), index)) {}

  std::uint64_t bits() { return eng_(); }
  // Uniform on (0,1).
  double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }
  double exponential() { return -std::log(uniform()); }
  std::size_t index(std::size_t n) {
    // Lemire-free rejection keeps this exact and portable.
    std::uint64_t limit = ~0ULL - (~0ULL % n);
    std::uint64_t r;
    do r = eng_(); while (r >= limit);
    return static_cast<std::size_t>(r % n);
  }
  Stream split(std::uint64_t index) { return Stream(derive_seed(eng_(), index)); }

 private:
  std::mt19937_64 eng_;
};

// Persistent per-label uniforms: U_j = (2h+1)/2^50 with h a 49-bit hash of (seed, j).
// 3·U_j stays exact as a double; U_j never sits on a dyadic boundary of depth < 50.
class LabelUniform {
 public:
  static constexpr unsigned kBits = 50;
  LabelUniform() = default;
  explicit LabelUniform(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t numerator(std::uint64_t label) const {
    std::uint64_t h = derive_seed(seed_, 0x5eedULL, label) >> (65 - kBits);
    return 2 * h + 1;
  }
  double value(std::uint64_t label) const {
    return std::ldexp(static_cast<double>(numerator(label)), -static_cast<int>(kBits));
  }
  Rational exact(std::uint64_t label) const {
    return Rational(BigInt(numerator(label)), BigInt(1) << kBits);
  }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_ = 0;
};

}  // namespace exhier
