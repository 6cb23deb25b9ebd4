#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace ltvstream {

// Seeded random source. The bit generator is std::mt19937_64, whose output
// sequence is fixed by the standard. The standard library's distributions are
// implementation-defined, so every variate below is computed here from raw
// 64-bit words:
//   uniform  - top 53 bits scaled by 2^-53
//   normal   - Marsaglia polar method (second variate cached)
//   gamma    - Marsaglia-Tsang squeeze, boosted by U^(1/a) for a < 1
// Given the same seed the draw sequence is identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();       // [0, 1)
  double uniform_open();  // (0, 1)
  double normal();
  double gamma(double shape);
  double chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

  // Independent child generator for a numbered stream. Does not advance *this.
  Rng split(std::uint64_t stream) const;

  std::string serialize() const;
  static Rng deserialize(const std::string& text);

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.seed_ == b.seed_ && a.engine_ == b.engine_ && a.has_spare_ == b.has_spare_ &&
           (!a.has_spare_ || a.spare_ == b.spare_);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer; used for deriving child seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace ltvstream
