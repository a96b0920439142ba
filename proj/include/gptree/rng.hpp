#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace gptree {

/// SplitMix64 finalizer. Platform-stable bijection on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x);

/// Order-sensitive mix of two or three words into one seed.
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c);

/// Reproducible random stream.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Uniform doubles take the top 53 bits. Normal variates use
/// the Marsaglia polar method (pairs cached), so every draw is a function of
/// the seed alone and does not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform();

  /// Uniform integer on [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  double normal();

  /// Independent child stream: mix64(base, ordinal) where base is one word
  /// drawn from this stream. Draw the base once, then derive any number of
  /// children from it so that parallel tasks see the same streams as a
  /// sequential loop.
  static Rng child(std::uint64_t base, std::uint64_t ordinal) { return Rng(mix64(base, ordinal)); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gptree
