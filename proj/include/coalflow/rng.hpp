#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace coalflow {

/// Counter-based, splittable random stream.
///
/// A stream is addressed by a 64-bit seed and a hierarchical path of
/// integers (e.g. replica / trajectory / step). The address is folded into
/// a 64-bit key; the n-th draw is a strong 64-bit mix of (key, n). Streams
/// never share state, so substreams can be handed to independent workers
/// and the draws are identical regardless of scheduling.
class RngStream {
 public:
  static constexpr std::size_t kMaxDepth = 8;

  explicit RngStream(std::uint64_t seed = 0);

  /// Child stream at path() + {index}. The parent is left untouched.
  [[nodiscard]] RngStream substream(std::uint64_t index) const;

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::span<const std::uint64_t> path() const {
    return {path_.data(), depth_};
  }
  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1).
  double uniform();

  /// Standard normal (Box-Muller; the second variate of each pair is cached).
  double normal();

  // UniformRandomBitGenerator, so <random> shuffles etc. can use a stream.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_u64(); }

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, kMaxDepth> path_{};
  std::size_t depth_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Finalizer of MurmurHash3; bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t z);

}  // namespace coalflow
