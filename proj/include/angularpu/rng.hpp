#pragma once

#include <cstdint>
#include <cstddef>
#include <utility>

namespace angularpu {

/// Counter-based random stream keyed by (seed, stream_id).
///
/// Draw k of a stream is a pure function of (seed, stream_id, k), built from
/// the SplitMix64 finalizer, so sequences are identical on every platform and
/// independent streams can be handed to parallel workers without coordination.
/// Gaussian and gamma variates are generated in-house rather than through
/// <random> distributions, whose algorithms are implementation-defined.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t position() const noexcept { return counter_; }

  /// Child stream derived from this stream's key; does not advance this stream.
  RngStream split(std::uint64_t child_id) const noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1]; safe as a log argument.
  double uniform_open0() noexcept;
  /// Uniform integer on [0, n). Requires n > 0.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  double normal() noexcept;
  /// Gamma(shape, 1), Marsaglia-Tsang with the shape < 1 boost.
  double gamma(double shape) noexcept;
  /// Beta(a, b) through the gamma ratio.
  double beta(double a, double b) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Fisher-Yates shuffle of indices driven by an RngStream.
template <class RandomIt>
void shuffle(RandomIt first, RandomIt last, RngStream& rng) {
  auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    auto j = rng.uniform_index(i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace angularpu
