#include "coalflow/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iterator>
#include <memory>
#include <sstream>

#include "coalflow/config_io.hpp"
#include "coalflow/counterexample.hpp"
#include "coalflow/errors.hpp"
#include "coalflow/snapshot.hpp"
#include "coalflow/verify.hpp"

namespace coalflow {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

SkeletonConfig default_skeleton() {
  SkeletonConfig c;
  c.window_lo = -1.0;
  c.window_hi = 1.0;
  c.spacing = 1.0 / 32.0;
  c.dt = 2.5e-4;
  c.t0 = 0.0;
  c.t1 = 1.0;
  c.start_times = SkeletonConfig::every(c.t0, c.t1, c.dt);
  return c;
}

SkeletonConfig default_shift_skeleton() {
  SkeletonConfig c;
  c.window_lo = -1.0;
  c.window_hi = 1.0;
  c.spacing = 1.0 / 16.0;
  c.dt = 1e-3;
  c.t0 = 0.0;
  c.t1 = 1.5;
  c.start_times = SkeletonConfig::every(0.0, 1.5, 0.01);
  return c;
}

// Lattice points at start times, so every query starts a fresh trajectory.
std::vector<EvalQuery> default_shift_queries() {
  return {{0.1, -0.25, 0.35}, {0.1, 0.25, 0.6}, {0.2, 0.0, 0.45}, {0.2, 0.5, 0.7},
          {0.3, -0.5, 0.55},  {0.3, 0.25, 0.8}, {0.4, 0.0, 0.65}, {0.4, -0.25, 0.9},
          {0.5, 0.5, 0.75},   {0.5, 0.0, 1.0}};
}

}  // namespace

RunConfig default_run_config() {
  RunConfig c;
  c.skeleton = default_skeleton();
  c.shift_skeleton = default_shift_skeleton();
  c.shift_queries = default_shift_queries();
  return c;
}

RunConfig ci_run_config() {
  RunConfig c = default_run_config();
  ReplicaCounts& r = c.replicas;
  r.cocycle_samples = 200;
  r.cocycle_skeletons = 2;
  r.axiom_tuples = 2000;
  r.two_point = 50000;
  r.meeting_bound = 20000;
  r.meeting_bound_ou = 5000;
  r.cluster_count = 50;
  r.shift_invariance = 300;
  r.marginals = 100000;
  r.stopped = 1000;
  r.small_time = 5000;
  r.sp_skeletons = 1;
  r.permutations = 99;
  c.marginal_dt = 0.01;
  return c;
}

void RunConfig::validate() const {
  skeleton.validate();
  shift_skeleton.validate();
  for (const auto& b : bundles) {
    const auto& names = bundle_names();
    if (std::find(names.begin(), names.end(), b) == names.end()) {
      throw ConfigError("unknown bundle '" + b + "'");
    }
  }
  if (bundles.empty()) throw ConfigError("no bundle selected");
  if (replicas.appendix < 10000) throw ConfigError("appendix replicas must be >= 10000");
  if (shift_queries.empty()) throw ConfigError("shift invariance needs queries");
  for (double h : shift_h) {
    for (const auto& q : shift_queries) {
      if (!shift_skeleton.grid_index(q.s) || !shift_skeleton.grid_index(q.t + h) || q.t < q.s) {
        throw ConfigError("shift query outside the shift skeleton's grid");
      }
    }
  }
  if (!(marginal_dt > 0.0)) throw ConfigError("marginal_dt must be positive");
}

json RunConfig::to_json() const {
  json j;
  j["skeleton"] = skeleton_config_to_json(skeleton);
  j["shift_skeleton"] = skeleton_config_to_json(shift_skeleton);
  j["shift_queries"] = json::array();
  for (const auto& q : shift_queries) j["shift_queries"].push_back({q.s, q.x, q.t});
  j["shift_h"] = shift_h;
  j["negative_control_drift"] = negative_control_drift;
  j["marginal_dt"] = marginal_dt;
  j["bundles"] = bundles;
  const ReplicaCounts& r = replicas;
  j["replicas"] = {{"cocycle_samples", r.cocycle_samples},
                   {"cocycle_skeletons", r.cocycle_skeletons},
                   {"axiom_tuples", r.axiom_tuples},
                   {"two_point", r.two_point},
                   {"meeting_bound", r.meeting_bound},
                   {"meeting_bound_ou", r.meeting_bound_ou},
                   {"cluster_count", r.cluster_count},
                   {"shift_invariance", r.shift_invariance},
                   {"marginals", r.marginals},
                   {"stopped", r.stopped},
                   {"small_time", r.small_time},
                   {"appendix", r.appendix},
                   {"appendix_correlation", r.appendix_correlation},
                   {"sp_skeletons", r.sp_skeletons},
                   {"permutations", r.permutations}};
  return j;
}

std::uint64_t RunConfig::hash() const { return config_hash(to_json()); }

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  static const std::vector<std::string> known = {
      "profile", "seed", "out", "bundles", "skeleton", "shift_skeleton", "shift_queries",
      "shift_h", "negative_control_drift", "marginal_dt", "replicas"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config field '" + key + "'");
    }
  }
  RunConfig c;
  try {
    const std::string profile = j.value("profile", "full");
    if (profile == "full") {
      c = default_run_config();
    } else if (profile == "ci") {
      c = ci_run_config();
    } else {
      throw ConfigError("profile must be 'full' or 'ci'");
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("bundles")) {
      const auto& b = j.at("bundles");
      c.bundles = b.is_string() ? std::vector<std::string>{b.get<std::string>()}
                                : b.get<std::vector<std::string>>();
    }
    if (j.contains("skeleton")) c.skeleton = skeleton_config_from_json(j.at("skeleton"));
    if (j.contains("shift_skeleton")) c.shift_skeleton = skeleton_config_from_json(j.at("shift_skeleton"));
    if (j.contains("shift_queries")) {
      c.shift_queries.clear();
      for (const auto& q : j.at("shift_queries")) {
        if (!q.is_array() || q.size() != 3) throw ConfigError("shift queries are [s, x, t] triples");
        c.shift_queries.push_back({q[0].get<double>(), q[1].get<double>(), q[2].get<double>()});
      }
    }
    if (j.contains("shift_h")) c.shift_h = j.at("shift_h").get<std::vector<double>>();
    c.negative_control_drift = j.value("negative_control_drift", c.negative_control_drift);
    c.marginal_dt = j.value("marginal_dt", c.marginal_dt);
    if (j.contains("replicas")) {
      const auto& r = j.at("replicas");
      if (!r.is_object()) throw ConfigError("replicas must be an object");
      const std::pair<const char*, std::size_t*> fields[] = {
          {"cocycle_samples", &c.replicas.cocycle_samples},
          {"cocycle_skeletons", &c.replicas.cocycle_skeletons},
          {"axiom_tuples", &c.replicas.axiom_tuples},
          {"two_point", &c.replicas.two_point},
          {"meeting_bound", &c.replicas.meeting_bound},
          {"meeting_bound_ou", &c.replicas.meeting_bound_ou},
          {"cluster_count", &c.replicas.cluster_count},
          {"shift_invariance", &c.replicas.shift_invariance},
          {"marginals", &c.replicas.marginals},
          {"stopped", &c.replicas.stopped},
          {"small_time", &c.replicas.small_time},
          {"appendix", &c.replicas.appendix},
          {"appendix_correlation", &c.replicas.appendix_correlation},
          {"sp_skeletons", &c.replicas.sp_skeletons},
          {"permutations", &c.replicas.permutations}};
      for (const auto& [key, _] : r.items()) {
        const auto it = std::find_if(std::begin(fields), std::end(fields),
                                     [&](const auto& f) { return key == f.first; });
        if (it == std::end(fields)) throw ConfigError("unknown replica count '" + key + "'");
        *it->second = r.at(key).get<std::size_t>();
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

const std::vector<std::string>& bundle_names() {
  static const std::vector<std::string> names = {
      "counterexample", "axioms", "cocycle",  "two_point", "meeting_bound", "cluster_count",
      "shift_invariance", "marginals", "stopped", "small_time", "sp", "negative_controls", "all"};
  return names;
}

// ---------------------------------------------------------------------------
// Components
// ---------------------------------------------------------------------------

namespace {

enum Component : std::uint64_t {
  kCounterexample,
  kAxioms,
  kCocycle,
  kTwoPoint,
  kMeetingBound,
  kClusterCount,
  kShift,
  kMarginals,
  kStopped,
  kSmallTime,
  kSp,
  kIdentityControl,
  kDriftControl,
};

std::vector<TestReport> prefixed(const std::string& prefix, std::vector<TestReport> reports) {
  for (auto& r : reports) r.name = prefix + "/" + r.name;
  return reports;
}

RngStream component_rng(const RunConfig& c, Component k) { return RngStream(c.seed).substream(k); }

std::shared_ptr<const SkeletonFlow> build(const SkeletonConfig& config, const RngStream& rng) {
  return std::make_shared<const SkeletonFlow>(build_skeleton(config, rng));
}

std::vector<TestReport> counterexample_reports(const RunConfig& c) {
  AppendixOptions o;
  o.replicas = c.replicas.appendix;
  o.correlation_replicas = c.replicas.appendix_correlation;
  o.permutations = c.replicas.permutations;
  return prefixed("counterexample", verify_appendix(o, component_rng(c, kCounterexample)).reports);
}

std::vector<TestReport> axiom_reports(const RunConfig& c) {
  RngStream rng = component_rng(c, kAxioms);
  std::vector<TestReport> out =
      prefixed("axioms/analytic",
               check_flow_axioms(FlowElement::analytic(),
                                 default_analytic_plan(c.replicas.axiom_tuples, rng.substream(0).next_u64())));
  const auto sk = build(c.skeleton, rng.substream(1));
  auto more = prefixed("axioms/skeleton",
                       check_flow_axioms(FlowElement::envelope(sk),
                                         default_plan(*sk, c.replicas.axiom_tuples, rng.substream(2).next_u64())));
  out.insert(out.end(), more.begin(), more.end());
  return out;
}

std::vector<TestReport> identity_control(const RunConfig& c) {
  RngStream rng = component_rng(c, kIdentityControl);
  for (auto& r : check_flow_axioms(FlowElement::identity(),
                                   default_analytic_plan(c.replicas.axiom_tuples, rng.next_u64()))) {
    if (r.name.rfind("F4", 0) == 0) {
      r.negative_control = true;
      r.notes += "; constant flow has no fresh points and must fail";
      return prefixed("negative_control/identity", {r});
    }
  }
  throw Error("identity fixture produced no F4 report");
}

std::vector<TestReport> cocycle_reports(const RunConfig& c) {
  RngStream rng = component_rng(c, kCocycle);
  std::vector<double> times;
  for (int i = 0; i <= 128; ++i) times.push_back(i / 64.0);
  std::vector<TestReport> out;
  TestReport a = check_cocycle(FlowElement::analytic(), times, -2.0, 2.0, c.replicas.cocycle_samples,
                               rng.substream(0).next_u64());
  a.name = "cocycle/analytic " + a.name;
  out.push_back(a);
  const double width = c.skeleton.window_hi - c.skeleton.window_lo;
  for (std::size_t j = 0; j < c.replicas.cocycle_skeletons; ++j) {
    auto sk = build(c.skeleton, rng.substream(1).substream(j));
    std::vector<double> grid;
    for (std::size_t k = 0; k <= sk->time_steps(); ++k) grid.push_back(sk->time(k) - sk->time(0));
    TestReport r = check_cocycle(FlowElement::envelope(sk), grid, c.skeleton.window_lo + 0.25 * width,
                                 c.skeleton.window_hi - 0.25 * width, c.replicas.cocycle_samples,
                                 rng.substream(2).substream(j).next_u64());
    r.name = "cocycle/skeleton " + std::to_string(j) + " " + r.name;
    out.push_back(r);
  }
  return out;
}

std::vector<TestReport> two_point_reports(const RunConfig& c) {
  return prefixed("two_point",
                  {test_two_point_law(0.0, 1.0, 1.0, c.replicas.two_point, component_rng(c, kTwoPoint), 0.01)});
}

std::vector<TestReport> meeting_reports(const RunConfig& c) {
  RngStream rng = component_rng(c, kMeetingBound);
  std::vector<TestReport> out;
  out.push_back(test_meeting_bound(DiffusionSpec::arratia(), 0.0, 0.1, -10.0, 10.0, 1.0,
                                   c.replicas.meeting_bound, rng.substream(0), 0.01));
  const DiffusionSpec ou = DiffusionSpec::ornstein_uhlenbeck(1.0, 1.0);
  TestReport scaled = test_meeting_bound(ou, 0.0, 0.1, -10.0, 10.0, 1.0, c.replicas.meeting_bound_ou,
                                         rng.substream(1), 1e-3);
  out.push_back(scaled);
  TestReport literal = scaled;
  literal.name = "meeting bound ou |m(y)-m(x)|";
  literal.reference = std::abs(scale_function(ou, 0.1) - scale_function(ou, 0.0));
  literal.notes = "same estimate against the unscaled scale-function difference";
  literal.decide();
  out.push_back(literal);
  return prefixed("meeting_bound", out);
}

std::vector<TestReport> cluster_reports(const RunConfig& c) {
  RngStream rng = component_rng(c, kClusterCount);
  const MotionModel model = DiffusionSpec::arratia();
  std::vector<TestReport> out;
  out.push_back(test_cluster_count(model, 0.0, 1.0, 0.0, 1.0, 512, c.replicas.cluster_count,
                                   rng.substream(0), 1e-3));
  out.push_back(test_cluster_count(model, 0.0, 1.0, 0.0, 0.01, 512, c.replicas.cluster_count,
                                   rng.substream(1), 1e-5));
  return prefixed("cluster_count", out);
}

std::vector<TestReport> shift_reports(const RunConfig& c) {
  RngStream rng = component_rng(c, kShift);
  ShiftInvarianceOptions o;
  o.permutations = c.replicas.permutations;
  std::vector<TestReport> out;
  for (std::size_t i = 0; i < c.shift_h.size(); ++i) {
    auto r = test_shift_invariance(c.shift_skeleton, c.shift_h[i], c.shift_queries,
                                   c.replicas.shift_invariance, rng.substream(i), o);
    out.insert(out.end(), r.begin(), r.end());
  }
  return prefixed("shift_invariance", out);
}

std::vector<TestReport> drift_control(const RunConfig& c) {
  SkeletonConfig broken = c.shift_skeleton;
  broken.injected_time_drift = c.negative_control_drift;
  ShiftInvarianceOptions o;
  o.permutations = c.replicas.permutations;
  o.negative_control = true;
  const double h = *std::max_element(c.shift_h.begin(), c.shift_h.end());
  auto r = test_shift_invariance(broken, h, c.shift_queries, c.replicas.shift_invariance,
                                 component_rng(c, kDriftControl), o);
  for (auto& rep : r) rep.notes += "; time-dependent drift injected, must fail";
  return prefixed("negative_control/drift", r);
}

std::vector<TestReport> marginal_reports(const RunConfig& c) {
  RngStream rng = component_rng(c, kMarginals);
  auto out = test_marginal_law(DiffusionSpec::arratia(), 0.0, 1.0, c.replicas.marginals,
                               rng.substream(0), c.marginal_dt);
  auto ou = test_marginal_law(DiffusionSpec::ornstein_uhlenbeck(1.0, std::sqrt(2.0)), 1.0, 1.0,
                              c.replicas.marginals, rng.substream(1), c.marginal_dt);
  out.insert(out.end(), ou.begin(), ou.end());
  return prefixed("marginals", out);
}

std::vector<TestReport> stopped_reports(const RunConfig& c) {
  const double starts[2] = {0.0, 1.0};
  return prefixed("stopped", {test_stopped_equivalence(DiffusionSpec::arratia(), starts, 1.0,
                                                       c.replicas.stopped, component_rng(c, kStopped),
                                                       0.01, 0.01, c.replicas.permutations)});
}

std::vector<TestReport> small_time_reports(const RunConfig& c) {
  RngStream rng = component_rng(c, kSmallTime);
  const double ladder[4] = {0.1, 0.05, 0.02, 0.01};
  auto out = test_small_time_continuity(DiffusionSpec::arratia(), 0.0, 0.5, ladder,
                                        c.replicas.small_time, rng.substream(0));
  auto ou = test_small_time_continuity(DiffusionSpec::ornstein_uhlenbeck(1.0, 1.0), 0.0, 0.5,
                                       ladder, c.replicas.small_time, rng.substream(1));
  out.insert(out.end(), ou.begin(), ou.end());
  return prefixed("small_time", out);
}

std::vector<TestReport> sp_reports(const RunConfig& c) {
  RngStream rng = component_rng(c, kSp);
  std::vector<TestReport> out;
  for (std::size_t j = 0; j < c.replicas.sp_skeletons; ++j) {
    auto sk = build(c.skeleton, rng.substream(j));
    auto r = prefixed("sp/skeleton " + std::to_string(j), check_sp_properties(*sk));
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

using ComponentFn = std::vector<TestReport> (*)(const RunConfig&);

std::vector<ComponentFn> components_of(const std::string& name) {
  if (name == "counterexample") return {counterexample_reports};
  if (name == "axioms") return {axiom_reports, identity_control};
  if (name == "cocycle") return {cocycle_reports};
  if (name == "two_point") return {two_point_reports};
  if (name == "meeting_bound") return {meeting_reports};
  if (name == "cluster_count") return {cluster_reports};
  if (name == "shift_invariance") return {shift_reports, drift_control};
  if (name == "marginals") return {marginal_reports};
  if (name == "stopped") return {stopped_reports};
  if (name == "small_time") return {small_time_reports};
  if (name == "sp") return {sp_reports};
  if (name == "negative_controls") return {identity_control, drift_control};
  if (name == "all") {
    return {counterexample_reports, axiom_reports, cocycle_reports, two_point_reports,
            meeting_reports, cluster_reports, shift_reports, marginal_reports, stopped_reports,
            small_time_reports, sp_reports, identity_control, drift_control};
  }
  throw ConfigError("unknown bundle '" + name + "'");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ReportBundle run_bundle(const RunConfig& config, const std::string& name) {
  ReportBundle bundle{name, {}};
  for (ComponentFn fn : components_of(name)) bundle.append(fn(config));
  return bundle;
}

void write_report_csv(std::ostream& out, const ReportBundle& bundle) {
  out << "name,rule,statistic,reference,error,tolerance,replicas,pass,negative_control,skipped,"
         "as_expected,notes\n";
  for (const auto& r : bundle.reports) {
    out << csv_field(r.name) << ',' << rule_name(r.rule) << ',' << format_double(r.statistic) << ','
        << format_double(r.reference) << ',' << format_double(r.mc_std_error) << ','
        << format_double(r.tolerance) << ',' << r.replicas << ',' << (r.pass ? 1 : 0) << ','
        << (r.negative_control ? 1 : 0) << ',' << (r.skipped ? 1 : 0) << ','
        << (r.as_expected() ? 1 : 0) << ',' << csv_field(r.notes) << '\n';
  }
}

void write_manifest(const fs::path& dir, const RunConfig& config, const std::string& command) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  json artifacts = json::array();
  for (const auto& f : files) {
    const std::string bytes = read_bytes(f);
    artifacts.push_back({{"path", f.filename().string()},
                         {"bytes", bytes.size()},
                         {"fnv1a64", hex64(fnv1a(bytes))}});
  }
  json m;
  m["tool"] = "coalflow";
  m["version"] = kToolVersion;
  m["command"] = command;
  m["config_hash"] = hex64(config.hash());
  m["seed"] = config.seed;
  m["created_at"] = utc_now();
  m["artifacts"] = artifacts;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

VerifyOutcome cmd_verify(const RunConfig& config) {
  config.validate();
  fs::create_directories(config.out);
  VerifyOutcome outcome;
  for (const auto& name : config.bundles) {
    ReportBundle bundle = run_bundle(config, name);
    const fs::path json_path = config.out / ("report_" + name + ".json");
    write_text(json_path, to_json(bundle, config.seed, config.hash()).dump(2) + "\n");
    std::ostringstream csv;
    write_report_csv(csv, bundle);
    const fs::path csv_path = config.out / ("report_" + name + ".csv");
    write_text(csv_path, csv.str());
    outcome.artifacts.push_back(json_path);
    outcome.artifacts.push_back(csv_path);

    ReportBundle appendix{"counterexample", {}};
    for (const auto& r : bundle.reports) {
      if (r.name.rfind("counterexample/", 0) == 0) {
        TestReport copy = r;
        copy.name = r.name.substr(std::string("counterexample/").size());
        appendix.append(copy);
      }
    }
    if (!appendix.reports.empty()) {
      const fs::path table = config.out / "counterexample_verdict.txt";
      write_text(table, appendix_verdict_table(appendix));
      outcome.artifacts.push_back(table);
    }
    outcome.ok = outcome.ok && bundle.ok();
    outcome.bundles.push_back(std::move(bundle));
  }
  write_manifest(config.out, config, "verify");
  outcome.artifacts.push_back(config.out / "manifest.json");
  return outcome;
}

std::vector<fs::path> cmd_simulate(const RunConfig& config) {
  config.validate();
  fs::create_directories(config.out);
  const SkeletonFlow sk = build_skeleton(config.skeleton, RngStream(config.seed));
  std::vector<fs::path> produced;

  const fs::path snap = config.out / "skeleton.bin";
  save_snapshot(sk, snap);
  produced.push_back(snap);

  const std::size_t steps = sk.time_steps();
  const std::size_t stride = std::max<std::size_t>(1, (steps + 499) / 500);
  std::vector<std::size_t> rows;
  for (std::size_t k = 0; k <= steps; k += stride) rows.push_back(k);
  if (rows.back() != steps) rows.push_back(steps);

  std::ostringstream traj;
  traj << "trajectory_id,start_value,time,position\n";
  const std::size_t lattice = config.skeleton.lattice_size();
  for (std::size_t i = 0; i < lattice; ++i) {
    const std::size_t id = sk.trajectory_id(0, i);
    for (std::size_t k : rows) {
      traj << id << ',' << format_double(sk.trajectory(id).start_value) << ','
           << format_double(sk.time(k)) << ',' << format_double(sk.position(id, k)) << '\n';
    }
  }
  write_text(config.out / "trajectories.csv", traj.str());
  produced.push_back(config.out / "trajectories.csv");

  const double width = config.skeleton.window_hi - config.skeleton.window_lo;
  const double lo = config.skeleton.window_lo + 0.25 * width;
  const double hi = config.skeleton.window_hi - 0.25 * width;
  std::ostringstream plot;
  plot << "time,live_classes,range_size,max_gap_interior\n";
  for (std::size_t k : rows) {
    const auto range = sk.range_at_step(k);
    plot << format_double(sk.time(k)) << ',' << sk.live(k).size() << ',' << range.size() << ','
         << format_double(range.empty() ? hi - lo : max_gap_in(range, lo, hi)) << '\n';
  }
  write_text(config.out / "plot_data.csv", plot.str());
  produced.push_back(config.out / "plot_data.csv");

  json summary;
  summary["config_hash"] = hex64(config.hash());
  summary["seed"] = config.seed;
  summary["model"] = model_name(config.skeleton.model);
  summary["trajectories"] = sk.trajectory_count();
  summary["time_steps"] = steps;
  summary["stored_values"] = sk.stored_values();
  summary["final_live_classes"] = sk.live(steps).size();
  write_text(config.out / "summary.json", summary.dump(2) + "\n");
  produced.push_back(config.out / "summary.json");

  write_manifest(config.out, config, "simulate");
  produced.push_back(config.out / "manifest.json");
  return produced;
}

void cmd_export(const fs::path& snapshot, const fs::path& queries, std::ostream& out) {
  const auto sk = std::make_shared<const SkeletonFlow>(load_snapshot(snapshot));
  const FlowElement f = FlowElement::envelope(sk);
  std::ifstream in(queries);
  if (!in) throw Error("cannot open query file " + queries.string());
  out << "s,x,t,value,status\n";
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double s, x, t;
    if (!(fields >> s >> x >> t)) {
      if (line_no == 1) continue;  // header
      throw Error("query file line " + std::to_string(line_no) + " is not 's,x,t'");
    }
    std::string value, status = "ok";
    try {
      value = format_double(evaluate(f, {s, x, t}));
    } catch (const AboveRange&) {
      status = "above_range";
    } catch (const OffGridTime&) {
      status = "off_grid";
    } catch (const OutOfHorizon&) {
      status = "out_of_horizon";
    } catch (const InvalidArgument&) {
      status = "invalid";
    }
    out << format_double(s) << ',' << format_double(x) << ',' << format_double(t) << ',' << value
        << ',' << status << '\n';
  }
}

}  // namespace coalflow
