#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace openem {

inline constexpr std::string_view kToolkitVersion = "0.3.0";

/// Input that violates a data contract (bad file, broken invariant,
/// failed paradigm check). The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration or command-line usage. Exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Named seed derivation: every random stage draws from
/// derive_seed(root, "<purpose>") so stages can be re-run independently.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose) {
  return splitmix64(root ^ splitmix64(fnv1a64(purpose)));
}

/// Seed for a ratio-dependent stage, e.g. the test set generated at k=30.
std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose, double k);

/// Shortest round-trippable rendering of a ratio ("3", "2.5").
std::string format_ratio(double k);

/// Half-up rounding of a non-negative count.
std::size_t round_half_up(double x);

}  // namespace openem
