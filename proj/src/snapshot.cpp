#include "coalflow/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "coalflow/config_io.hpp"
#include "coalflow/errors.hpp"

namespace coalflow {

static_assert(std::endian::native == std::endian::little,
              "snapshot codec assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'C', 'F', 'L', 'W', 'S', 'K', 'E', 'L'};

class Writer {
 public:
  template <class T>
  void put(T v) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    bytes.insert(bytes.end(), raw, raw + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<unsigned char> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b, std::size_t end) : bytes_(b), end_(end) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void get_bytes(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  [[nodiscard]] std::size_t remaining() const { return end_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw SnapshotError("snapshot is truncated");
  }
  const std::vector<unsigned char>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> SkeletonSnapshotCodec::encode(const SkeletonFlow& sk) {
  const nlohmann::json cfg = skeleton_config_to_json(sk.config_);
  const std::string cfg_text = cfg.dump();
  const std::size_t steps = sk.time_steps();

  Writer w;
  w.put_bytes(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(kSnapshotVersion);
  w.put<std::uint64_t>(config_hash(cfg));
  w.put<std::uint64_t>(sk.seed_);
  w.put<std::uint64_t>(steps);
  w.put<std::uint64_t>(sk.trajectories_.size());
  w.put<std::uint64_t>(sk.config_.lattice_size());
  w.put<std::uint64_t>(cfg_text.size());
  w.put_bytes(cfg_text.data(), cfg_text.size());
  for (const auto& tr : sk.trajectories_) {
    w.put<double>(tr.start_value);
    w.put<std::uint32_t>(tr.activation);
    w.put<std::uint32_t>(tr.merge_step);
    w.put<std::uint32_t>(tr.merged_into);
  }
  for (const auto& own : sk.own_) {
    w.put<std::uint64_t>(own.size());
    w.put_bytes(own.data(), own.size() * sizeof(double));
  }
  for (std::size_t k = 0; k <= steps; ++k) {
    const auto ids = sk.live(k);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ids.size()));
    w.put_bytes(ids.data(), ids.size() * sizeof(std::uint32_t));
  }
  const std::uint64_t checksum = fnv1a(w.bytes);
  w.put<std::uint64_t>(checksum);
  return std::move(w.bytes);
}

SkeletonFlow SkeletonSnapshotCodec::decode(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < sizeof kMagic + sizeof(std::uint64_t)) {
    throw SnapshotError("snapshot is truncated");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored_sum;
  std::memcpy(&stored_sum, bytes.data() + body, sizeof stored_sum);
  if (fnv1a({bytes.data(), body}) != stored_sum) throw SnapshotError("snapshot checksum mismatch");

  Reader r(bytes, body);
  char magic[8];
  r.get_bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw SnapshotError("not a skeleton snapshot");
  const auto version = r.get<std::uint32_t>();
  if (version != kSnapshotVersion) {
    throw SnapshotError("unsupported snapshot version " + std::to_string(version));
  }
  const auto hash = r.get<std::uint64_t>();
  const auto seed = r.get<std::uint64_t>();
  const auto steps = r.get<std::uint64_t>();
  const auto count = r.get<std::uint64_t>();
  const auto lattice = r.get<std::uint64_t>();
  const auto cfg_len = r.get<std::uint64_t>();
  if (cfg_len > r.remaining()) throw SnapshotError("snapshot is truncated");
  std::string cfg_text(cfg_len, '\0');
  r.get_bytes(cfg_text.data(), cfg_len);

  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(cfg_text);
  } catch (const nlohmann::json::exception& e) {
    throw SnapshotError(std::string("snapshot config is not JSON: ") + e.what());
  }
  if (config_hash(cfg) != hash) throw SnapshotError("snapshot config hash mismatch");

  SkeletonFlow sk;
  sk.config_ = skeleton_config_from_json(cfg);
  sk.seed_ = seed;
  if (sk.config_.time_steps() != steps || sk.config_.lattice_size() != lattice ||
      count != sk.config_.start_times.size() * lattice) {
    throw SnapshotError("snapshot grid dimensions disagree with its config");
  }
  if (count > r.remaining() / 20) throw SnapshotError("snapshot is truncated");
  sk.trajectories_.resize(count);
  for (auto& tr : sk.trajectories_) {
    tr.start_value = r.get<double>();
    tr.activation = r.get<std::uint32_t>();
    tr.merge_step = r.get<std::uint32_t>();
    tr.merged_into = r.get<std::uint32_t>();
    if (tr.merge_step != SkeletonFlow::kNever && tr.merged_into >= count) {
      throw SnapshotError("snapshot merge record points outside the trajectory table");
    }
  }
  sk.own_.resize(count);
  for (auto& own : sk.own_) {
    const auto n = r.get<std::uint64_t>();
    if (n > r.remaining() / sizeof(double)) throw SnapshotError("snapshot is truncated");
    own.resize(n);
    r.get_bytes(own.data(), n * sizeof(double));
  }
  sk.live_offsets_.assign(1, 0);
  for (std::uint64_t k = 0; k <= steps; ++k) {
    const auto n = r.get<std::uint32_t>();
    if (n > r.remaining() / sizeof(std::uint32_t)) throw SnapshotError("snapshot is truncated");
    const std::size_t at = sk.live_ids_.size();
    sk.live_ids_.resize(at + n);
    r.get_bytes(sk.live_ids_.data() + at, n * sizeof(std::uint32_t));
    for (std::size_t i = at; i < sk.live_ids_.size(); ++i) {
      const auto id = sk.live_ids_[i];
      if (id >= count || k < sk.trajectories_[id].activation ||
          k - sk.trajectories_[id].activation >= sk.own_[id].size()) {
        throw SnapshotError("snapshot live list references missing storage");
      }
    }
    sk.live_offsets_.push_back(sk.live_ids_.size());
  }
  if (r.remaining() != 0) throw SnapshotError("snapshot has trailing bytes");
  return sk;
}

void save_snapshot(const SkeletonFlow& skeleton, const std::filesystem::path& path) {
  const auto bytes = SkeletonSnapshotCodec::encode(skeleton);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SnapshotError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw SnapshotError("failed writing " + path.string());
}

SkeletonFlow load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return SkeletonSnapshotCodec::decode(bytes);
}

}  // namespace coalflow
