#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace gbst {

// Deterministic random source. mt19937_64 output is fully specified by the
// standard, and all derived draws below avoid std::*_distribution (whose
// algorithms are implementation-defined), so identical seeds produce
// identical streams on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Uniform in [0, bound). Modulo bias is negligible for the bounds used here.
  std::uint64_t below(std::uint64_t bound) { return eng_() % bound; }

  // Uniform integer in [lo, hi], inclusive.
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Uniform in [0, 1) with 53 random bits.
  double real01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return real01() < p; }

 private:
  std::mt19937_64 eng_;
};

// Fisher-Yates shuffle driven by Rng (std::shuffle is not reproducible
// across standard libraries).
template <typename T>
void deterministic_shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

}  // namespace gbst
