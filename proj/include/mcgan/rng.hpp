#pragma once

#include <cstdint>
#include <string_view>

namespace mcgan {

/// Counter-based generator: the i-th draw is a pure function of (key, i).
///
/// A run seed is split into independent named sub-streams ("init", "data",
/// "noise", "mc", ...) with `Rng(seed, "name")`. Two streams never share
/// state, so the amount drawn from one stream cannot shift another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t seed, std::string_view stream);

  /// Next raw 64-bit value.
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal (Box-Muller, both outputs used).
  double normal();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  /// Derive a child stream, e.g. one per repeat or per trial.
  Rng split(std::string_view stream) const;
  Rng split(std::uint64_t index) const;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// 64-bit FNV-1a, used for stream names and config hashes.
std::uint64_t fnv1a(std::string_view text);

}  // namespace mcgan
