#include "coalflow/rng.hpp"

#include <cmath>
#include <numbers>

#include "coalflow/errors.hpp"

namespace coalflow {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kPathSalt = 0xd1b54a32d192ed03ULL;

// SplitMix64 output function.
std::uint64_t splitmix_out(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), key_(mix64(seed ^ kPathSalt)) {}

RngStream RngStream::substream(std::uint64_t index) const {
  if (depth_ == kMaxDepth) {
    throw InvalidArgument("RngStream: substream path deeper than kMaxDepth");
  }
  RngStream child(*this);
  child.path_[depth_] = index;
  child.depth_ = depth_ + 1;
  child.key_ = mix64(key_ + kPathSalt * (depth_ + 1)) ^ splitmix_out(index + kGolden);
  child.key_ = mix64(child.key_);
  child.counter_ = 0;
  child.has_cached_normal_ = false;
  return child;
}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return splitmix_out(key_ + counter_ * kGolden);
}

double RngStream::uniform() {
  // 53 random bits, shifted off zero by half an ulp.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phase = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(phase);
  has_cached_normal_ = true;
  return r * std::cos(phase);
}

}  // namespace coalflow
