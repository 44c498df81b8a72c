#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace isearch {

// Deterministic random stream: xoshiro256** seeded through splitmix64.
//
// Normal deviates use the Box-Muller transform over the uniform
// stream and cache the second deviate of each pair. Uniform doubles take the
// top 53 bits of a draw. Everything here is defined in terms of integer
// arithmetic plus std::log/std::sqrt/std::cos/std::sin, so two builds linked
// against the same libm produce bit-identical streams.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  // Uniform integer in [0, bound); bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound);
  double normal();

  // Fisher-Yates shuffle of `values`.
  void shuffle(std::span<std::size_t> values);
  std::vector<std::size_t> permutation(std::size_t n);

  // Independent child stream, a pure function of (seed, stream id). Used for
  // per-cell / per-trial seeds so results do not depend on execution order.
  RandomSource split(std::uint64_t stream_id) const;

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t& x);

// Mix several integers into a single seed (order-sensitive).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b = 0);

}  // namespace isearch
