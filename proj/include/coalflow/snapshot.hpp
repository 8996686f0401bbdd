#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "coalflow/skeleton.hpp"

namespace coalflow {

/// Versioned binary snapshot of a built skeleton (little-endian):
///
///   magic "CFLWSKEL", u32 version, u64 config hash, u64 seed,
///   u64 time steps, u64 trajectory count, u64 lattice size,
///   u64 config JSON length + bytes,
///   per trajectory: f64 start value, u32 activation, u32 merge step, u32 parent,
///   per trajectory: u64 stored length + f64 positions,
///   per grid step: u32 live count + u32 live ids,
///   u64 FNV-1a of everything before.
inline constexpr std::uint32_t kSnapshotVersion = 1;

class SkeletonSnapshotCodec {
 public:
  static std::vector<unsigned char> encode(const SkeletonFlow& skeleton);
  static SkeletonFlow decode(const std::vector<unsigned char>& bytes);
};

void save_snapshot(const SkeletonFlow& skeleton, const std::filesystem::path& path);
SkeletonFlow load_snapshot(const std::filesystem::path& path);

}  // namespace coalflow
