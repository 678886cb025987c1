// silt-lab: experiment driver for the random-walk self-intersection
// local time laboratory.
//
//   silt-lab verify|convergence|estimate|expect|occupation
//            --config <file> [--out <dir>] [--seed S] [--replicas N] [--parallel P]
//
// The config file is JSON (see README). SILT_LAB_OUT overrides the output
// directory and nothing else. Exit status is nonzero iff a gated suite fails.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "siltlab/errors.hpp"
#include "siltlab/harness.hpp"

using namespace siltlab;

int main(int argc, char** argv) {
  CLI::App app{"random-walk self-intersection local time laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  uint64_t seed = 0;
  int replicas = 0, parallel = 0;
  bool have_seed = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--seed", seed, "base seed (overrides config)")->each([&](std::string) {
      have_seed = true;
    });
    sub->add_option("--replicas", replicas, "Monte Carlo replicas (overrides config)");
    sub->add_option("--parallel", parallel, "worker threads (overrides config)");
  };

  CLI::App* verify = app.add_subcommand("verify", "exact-identity suites");
  CLI::App* conv = app.add_subcommand("convergence", "level-ladder convergence studies");
  CLI::App* estimate = app.add_subcommand("estimate", "Monte Carlo alpha/gamma estimation");
  CLI::App* expect = app.add_subcommand("expect", "closed-form oracle self-checks");
  CLI::App* occup = app.add_subcommand("occupation", "occupation-identity suites");
  for (CLI::App* sub : {verify, conv, estimate, expect, occup}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load_config_file(config_path);

    std::string expected_kind;
    if (verify->parsed()) expected_kind = "verify-identities";
    if (conv->parsed()) expected_kind = "convergence";
    if (expect->parsed()) expected_kind = "expectations";
    if (occup->parsed()) expected_kind = "occupation";
    if (estimate->parsed()) {
      if (cfg.kind != "estimate-alpha" && cfg.kind != "estimate-gamma")
        fail(Err::config_invalid, "estimate expects kind estimate-alpha or estimate-gamma");
    } else if (cfg.kind != expected_kind) {
      fail(Err::config_invalid,
           "config kind '" + cfg.kind + "' does not match subcommand '" + expected_kind + "'");
    }

    if (have_seed) cfg.seed = seed;
    if (replicas > 0) cfg.replicas = replicas;
    if (parallel > 0) cfg.parallelism = parallel;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (const char* env = std::getenv("SILT_LAB_OUT")) cfg.out_dir = env;

    RunReport report = run(cfg);
    emit(report, cfg.out_dir);

    for (const SuiteResult& s : report.suites)
      std::cout << (s.passed ? "[PASS] " : "[FAIL] ") << s.name << " (" << s.metrics.size()
                << " metrics)\n";
    std::cout << "report: " << cfg.out_dir << "/report.json\n";
    return report.passed() ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 3;
  }
}
