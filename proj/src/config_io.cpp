#include "coalflow/config_io.hpp"

#include <cstdio>

#include "coalflow/errors.hpp"

namespace coalflow {

using nlohmann::json;

namespace {

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace

json model_to_json(const MotionModel& model) {
  if (const auto* h = std::get_if<HarrisSpec>(&model)) {
    return {{"kind", "harris"}, {"gamma", h->gamma}, {"merge_gap", h->merge_gap}};
  }
  const auto& spec = std::get<DiffusionSpec>(model);
  if (spec.is_arratia()) return {{"kind", "arratia"}};
  if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&spec.kind())) {
    return {{"kind", "ou"}, {"rate", ou->rate}, {"volatility", ou->volatility}};
  }
  throw ConfigError("generic diffusions cannot be serialized");
}

MotionModel model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw ConfigError("model must be an object with a string 'kind'");
  }
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "arratia") return DiffusionSpec::arratia();
  if (kind == "ou") {
    try {
      return DiffusionSpec::ornstein_uhlenbeck(number(j, "rate", 1.0), number(j, "volatility", 1.0));
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  if (kind == "harris") {
    HarrisSpec h;
    h.gamma = number(j, "gamma", 1.0);
    h.merge_gap = number(j, "merge_gap", h.merge_gap);
    if (!(h.gamma > 0.0) || !(h.merge_gap > 0.0)) {
      throw ConfigError("harris model needs gamma > 0 and merge_gap > 0");
    }
    return h;
  }
  throw ConfigError("unknown model kind '" + kind + "'");
}

json skeleton_config_to_json(const SkeletonConfig& c) {
  json j;
  j["window"] = {c.window_lo, c.window_hi};
  j["spacing"] = c.spacing;
  j["start_times"] = c.start_times;
  j["dt"] = c.dt;
  j["horizon"] = {c.t0, c.t1};
  j["model"] = model_to_json(c.model);
  j["density_tolerance"] = c.density_tolerance;
  j["injected_time_drift"] = c.injected_time_drift;
  return j;
}

SkeletonConfig skeleton_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("skeleton config must be an object");
  SkeletonConfig c;
  try {
    if (j.contains("window")) {
      const auto& w = j.at("window");
      if (!w.is_array() || w.size() != 2) throw ConfigError("window must be [lo, hi]");
      c.window_lo = w.at(0).get<double>();
      c.window_hi = w.at(1).get<double>();
    }
    if (j.contains("horizon")) {
      const auto& h = j.at("horizon");
      if (!h.is_array() || h.size() != 2) throw ConfigError("horizon must be [t0, t1]");
      c.t0 = h.at(0).get<double>();
      c.t1 = h.at(1).get<double>();
    }
    c.spacing = number(j, "spacing", c.spacing);
    c.dt = number(j, "dt", c.dt);
    c.density_tolerance = number(j, "density_tolerance", c.density_tolerance);
    c.injected_time_drift = number(j, "injected_time_drift", c.injected_time_drift);
    if (j.contains("model")) c.model = model_from_json(j.at("model"));
    if (j.contains("start_times")) {
      const auto& st = j.at("start_times");
      if (st.is_array()) {
        c.start_times = st.get<std::vector<double>>();
      } else if (st.is_object()) {
        c.start_times = SkeletonConfig::every(number(st, "from", c.t0), number(st, "to", c.t1),
                                              number(st, "every", 0.0));
      } else {
        throw ConfigError("start_times must be an array or a {from,to,every} object");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("skeleton config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (const unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view text) {
  return fnv1a({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

std::uint64_t config_hash(const json& j) { return fnv1a(j.dump()); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace coalflow
