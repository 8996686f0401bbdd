#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "coalflow/config_io.hpp"
#include "coalflow/errors.hpp"
#include "coalflow/skeleton.hpp"
#include "coalflow/snapshot.hpp"

using namespace coalflow;

namespace {

SkeletonConfig small_config() {
  SkeletonConfig c;
  c.window_lo = -0.5;
  c.window_hi = 0.5;
  c.spacing = 1.0 / 16.0;
  c.dt = 1e-3;
  c.t0 = 0.0;
  c.t1 = 0.2;
  c.start_times = SkeletonConfig::every(0.0, 0.2, 0.01);
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  SkeletonConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  CHECK(c.lattice_size() == 17);
  CHECK(c.time_steps() == 200);
  CHECK(c.epsilon_density() == doctest::Approx(0.5));
  CHECK(c.grid_index(0.1).value() == 100);
  CHECK_FALSE(c.grid_index(0.1005).has_value());
  c.spacing = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.start_times = {0.3};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.window_hi = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("skeleton structure") {
  const SkeletonConfig c = small_config();
  const SkeletonFlow sk = build_skeleton(c, RngStream(3));
  CHECK(sk.trajectory_count() == c.start_times.size() * c.lattice_size());
  CHECK(sk.time_steps() == 200);
  for (std::size_t k = 0; k <= sk.time_steps(); k += 7) {
    const auto live = sk.live(k);
    for (std::size_t i = 1; i < live.size(); ++i) CHECK(sk.position(live[i - 1], k) < sk.position(live[i], k));
  }
  // A trajectory sits at its start value at activation.
  const std::size_t id = sk.trajectory_id(5, 3);
  const auto& tr = sk.trajectory(id);
  CHECK(sk.position(id, tr.activation) == tr.start_value);
  CHECK(tr.start_value == c.lattice_point(3));
  CHECK_THROWS_AS((void)sk.step_of(0.0005), OffGridTime);
  CHECK_THROWS_AS((void)sk.step_of(0.3), OutOfHorizon);
}

TEST_CASE("builds are deterministic per seed") {
  const SkeletonConfig c = small_config();
  const SkeletonFlow a = build_skeleton(c, RngStream(3));
  const SkeletonFlow b = build_skeleton(c, RngStream(3));
  const SkeletonFlow d = build_skeleton(c, RngStream(4));
  bool differs = false;
  for (std::size_t id = 0; id < a.trajectory_count(); id += 11) {
    CHECK(a.position(id, 200) == b.position(id, 200));
    differs = differs || a.position(id, 200) != d.position(id, 200);
  }
  CHECK(differs);
}

TEST_CASE("SP properties hold on a dense skeleton") {
  SkeletonConfig c;
  c.window_lo = -1.0;
  c.window_hi = 1.0;
  c.spacing = 1.0 / 32.0;
  c.dt = 2.5e-4;
  c.t1 = 0.5;
  c.start_times = SkeletonConfig::every(0.0, 0.5, c.dt);
  const SkeletonFlow sk = build_skeleton(c, RngStream(17));
  for (const auto& r : check_sp_properties(sk)) {
    INFO(r.name << " stat=" << r.statistic << " ref=" << r.reference << " " << r.notes);
    CHECK(r.as_expected());
  }
}

TEST_CASE("max_gap_in counts the window ends") {
  const double pts[] = {0.1, 0.2, 0.6};
  CHECK(max_gap_in(pts, 0.0, 1.0) == doctest::Approx(0.4));
  CHECK(max_gap_in(pts, 0.15, 0.5) == doctest::Approx(0.3));
  CHECK(max_gap_in({}, 0.0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("snapshot round trip and corruption") {
  const SkeletonConfig c = small_config();
  const SkeletonFlow sk = build_skeleton(c, RngStream(5));
  const auto bytes = SkeletonSnapshotCodec::encode(sk);
  const SkeletonFlow back = SkeletonSnapshotCodec::decode(bytes);
  CHECK(back.seed() == sk.seed());
  CHECK(back.trajectory_count() == sk.trajectory_count());
  for (std::size_t id = 0; id < sk.trajectory_count(); id += 3) {
    for (std::size_t k = 0; k <= sk.time_steps(); k += 13) CHECK(back.position(id, k) == sk.position(id, k));
  }
  CHECK(SkeletonSnapshotCodec::encode(back) == bytes);

  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x01;
  CHECK_THROWS_AS(SkeletonSnapshotCodec::decode(flipped), SnapshotError);
  auto cut = bytes;
  cut.resize(cut.size() / 3);
  CHECK_THROWS_AS(SkeletonSnapshotCodec::decode(cut), SnapshotError);
  CHECK_THROWS_AS(SkeletonSnapshotCodec::decode({}), SnapshotError);

  const auto path = std::filesystem::temp_directory_path() / "coalflow_unit_snapshot.bin";
  save_snapshot(sk, path);
  CHECK(SkeletonSnapshotCodec::encode(load_snapshot(path)) == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("skeleton config JSON round trip") {
  SkeletonConfig c = small_config();
  c.model = DiffusionSpec::ornstein_uhlenbeck(2.0, 0.5);
  const auto j = skeleton_config_to_json(c);
  const SkeletonConfig back = skeleton_config_from_json(j);
  CHECK(skeleton_config_to_json(back) == j);
  CHECK(config_hash(j) == config_hash(skeleton_config_to_json(back)));
  CHECK_THROWS_AS(skeleton_config_from_json(nlohmann::json{{"model", {{"kind", "nope"}}}}), ConfigError);
  CHECK_THROWS_AS(model_to_json(DiffusionSpec::generic([](double) { return 0.0; }, [](double) { return 1.0; }, 0.0)),
                  ConfigError);
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}
