#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rlip {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic generator for a named substream. The same (seed, tags...)
/// always yields the same sequence, regardless of which thread builds it.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {}) {
  std::uint64_t h = mix64(seed);
  for (auto t : tags) {
    h = mix64(h ^ mix64(t));
  }
  return Rng(h);
}

// Stream tags keep independent consumers of one seed apart.
namespace stream {
inline constexpr std::uint64_t kObservations = 0x6f6273;
inline constexpr std::uint64_t kPolicyInit = 0x696e6974;
inline constexpr std::uint64_t kTraining = 0x747261696e;
inline constexpr std::uint64_t kPerformance = 0x70657266;
inline constexpr std::uint64_t kEvaluation = 0x6576616c;
inline constexpr std::uint64_t kBootstrap = 0x626f6f74;
inline constexpr std::uint64_t kKmeans = 0x6b6d;
inline constexpr std::uint64_t kProblem = 0x70726f62;
} // namespace stream

} // namespace rlip
