#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace loggas {

/// SplitMix64 finalizer; used only to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the stream addressed by `path` under `root`: stream i = hash(seed, i),
/// applied once per path component so nested indices (N, replica, block) never collide.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(root);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

class Stream {
 public:
  using Engine = std::mt19937_64;

  explicit Stream(std::uint64_t seed) : engine_(seed) {}
  Stream(std::uint64_t root, std::initializer_list<std::uint64_t> path)
      : engine_(derive_seed(root, path)) {}

  double uniform() { return unit_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
  double normal() { return normal_(engine_); }
  std::uint64_t index(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_); }

  Engine& engine() { return engine_; }

 private:
  Engine engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace loggas
