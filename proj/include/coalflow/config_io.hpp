#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include <json.hpp>

#include "coalflow/motion.hpp"
#include "coalflow/skeleton.hpp"

namespace coalflow {

/// {"kind": "arratia"} | {"kind": "ou", "rate": l, "volatility": s} |
/// {"kind": "harris", "gamma": g, "merge_gap": e}. Generic diffusions have
/// no JSON form and raise ConfigError.
nlohmann::json model_to_json(const MotionModel& model);
MotionModel model_from_json(const nlohmann::json& j);

nlohmann::json skeleton_config_to_json(const SkeletonConfig& config);
/// Accepts "start_times" either as an explicit array or as
/// {"from": a, "to": b, "every": h}.
SkeletonConfig skeleton_config_from_json(const nlohmann::json& j);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::span<const unsigned char> bytes,
                    std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view text);

/// Hash of the canonical (sorted-key, compact) JSON dump.
std::uint64_t config_hash(const nlohmann::json& j);

std::string hex64(std::uint64_t v);

}  // namespace coalflow
