#include "mcgan/rng.hpp"

#include <cmath>
#include <numbers>

namespace mcgan {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

Rng::Rng(std::uint64_t seed) : key_(splitmix(seed)) {}

Rng::Rng(std::uint64_t seed, std::string_view stream)
    : key_(splitmix(splitmix(seed) ^ fnv1a(stream))) {}

std::uint64_t Rng::next_u64() {
  // Two rounds of mixing over (key, counter); statistically solid for the
  // sample sizes used here and trivially reproducible.
  const std::uint64_t c = counter_++;
  return splitmix(key_ ^ splitmix(c + 0x632BE59BD9B4E019ULL));
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return v % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Rng Rng::split(std::string_view stream) const {
  Rng child(0);
  child.key_ = splitmix(key_ ^ fnv1a(stream));
  return child;
}

Rng Rng::split(std::uint64_t index) const {
  Rng child(0);
  child.key_ = splitmix(key_ + splitmix(index ^ 0xD1B54A32D192ED03ULL));
  return child;
}

}  // namespace mcgan
