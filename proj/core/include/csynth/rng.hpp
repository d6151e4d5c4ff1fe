#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace csynth {

/// SplitMix64 finaliser; a bijection on 64-bit words.
[[nodiscard]] std::uint64_t mix64(std::uint64_t x) noexcept;

/// Deterministic child seed for a named purpose ("init", "batch", ...).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Counter-based generator: draw i of stream s under seed k is mix(key(k, s) + i * golden).
/// Results depend only on (seed, stream, draw index), never on scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform in the open interval (0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller, pairs cached).
  double normal() noexcept;
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) noexcept;

  [[nodiscard]] std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace csynth
