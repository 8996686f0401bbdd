// coalflow: simulate skeletons, run verification bundles, export evaluations.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "coalflow/errors.hpp"
#include "coalflow/runner.hpp"

using namespace coalflow;

namespace {

RunConfig resolve(const std::string& config_path, bool ci, std::optional<std::uint64_t> seed,
                  const std::string& out, const std::vector<std::string>& bundles) {
  RunConfig c = config_path.empty() ? (ci ? ci_run_config() : default_run_config())
                                    : load_run_config(config_path);
  if (seed) c.seed = *seed;
  if (!out.empty()) c.out = out;
  if (!bundles.empty()) c.bundles = bundles;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coalescing stochastic flows: skeleton construction and verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  bool ci = false;
  std::vector<std::string> bundles;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run config")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--out", out, "Output directory (overrides the config)");
    sub->add_flag("--ci", ci, "Reduced replica counts when no config is given");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Build and persist a skeleton");
  add_common(simulate);

  CLI::App* verify = app.add_subcommand("verify", "Run verification bundles");
  add_common(verify);
  verify->add_option("--bundle", bundles, "Bundle(s) to run")
      ->check(CLI::IsMember(bundle_names()));

  std::string snapshot, queries, export_out;
  CLI::App* exp = app.add_subcommand("export", "Evaluate queries on a stored skeleton");
  exp->add_option("--snapshot", snapshot, "skeleton.bin")->required()->check(CLI::ExistingFile);
  exp->add_option("--queries", queries, "CSV file of s,x,t rows")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", export_out, "Output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      const RunConfig c = resolve(config_path, ci, seed, out, {});
      for (const auto& p : cmd_simulate(c)) std::cout << p.string() << "\n";
      return 0;
    }
    if (verify->parsed()) {
      const RunConfig c = resolve(config_path, ci, seed, out, bundles);
      const VerifyOutcome outcome = cmd_verify(c);
      for (const auto& b : outcome.bundles) {
        for (const auto& r : b.reports) {
          std::cout << (r.skipped ? "SKIP" : r.as_expected() ? "ok  " : "FAIL") << "  " << r.name
                    << "  stat=" << r.statistic << " ref=" << r.reference
                    << (r.negative_control ? "  (control)" : "") << "\n";
        }
      }
      std::cout << (outcome.ok ? "all reports as expected" : "some reports failed") << "\n";
      return outcome.ok ? 0 : 1;
    }
    if (exp->parsed()) {
      if (export_out.empty()) {
        cmd_export(snapshot, queries, std::cout);
      } else {
        std::ofstream file(export_out, std::ios::binary | std::ios::trunc);
        if (!file) throw Error("cannot write " + export_out);
        cmd_export(snapshot, queries, file);
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
