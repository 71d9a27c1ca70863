// Command-line front end: run, compare, oracle.

#include "csdlma/runner.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Carrier-sense deep-RL multiple access simulator"};
  app.require_subcommand(1);

  std::string config, config_a, config_b, out, policy_out;
  int seeds = 0;
  int jobs = 1;
  std::uint64_t slots = 0;

  auto* run = app.add_subcommand("run", "Run a multi-seed experiment");
  run->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds, "Number of seeds (overrides config)");
  run->add_option("--slots", slots, "Basic slots per run (overrides config)");
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--jobs", jobs, "Seeds run concurrently")->check(CLI::PositiveNumber);

  auto* cmp = app.add_subcommand("compare", "Run two configs and pair their results");
  cmp->add_option("--config-a", config_a, "First config")->required()->check(CLI::ExistingFile);
  cmp->add_option("--config-b", config_b, "Second config")->required()->check(CLI::ExistingFile);
  cmp->add_option("--seeds", seeds, "Number of seeds (overrides configs)");
  cmp->add_option("--slots", slots, "Basic slots per run (overrides configs)");
  cmp->add_option("--out", out, "Output directory")->required();
  cmp->add_option("--jobs", jobs, "Seeds run concurrently")->check(CLI::PositiveNumber);

  auto* orc = app.add_subcommand("oracle", "Solve the model-aware benchmark for a node mix");
  orc->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  orc->add_option("--policy-out", policy_out, "Write the policy table here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  auto load = [&](const std::string& path) {
    auto cfg = csdlma::load_config(path);
    if (seeds > 0) cfg.seeds = seeds;
    if (slots > 0) cfg.slots = slots;
    return cfg;
  };

  try {
    if (*run) {
      const auto cfg = load(config);
      const auto result = csdlma::run_experiment(cfg, fs::path(out), jobs);
      std::cout << result.summary.dump(2) << '\n';
      for (const auto& r : result.runs) {
        if (r.fault) return 2;
      }
      return 0;
    }
    if (*cmp) {
      const auto a = load(config_a);
      const auto b = load(config_b);
      std::cout << csdlma::run_compare(a, b, fs::path(out), jobs).dump(2) << '\n';
      return 0;
    }
    const auto cfg = csdlma::load_config(config);
    const auto report = csdlma::bench_oracle(cfg);
    std::printf("# gain %.6f\n", report.gain);
    std::printf("# states %zu\n", report.states);
    std::printf("# wait_always %.6f\n", report.wait_always);
    std::printf("# iterations %d\n", report.solution.iterations);
    if (!policy_out.empty()) {
      std::ofstream f(policy_out);
      csdlma::oracle::write_policy_csv(report.model, report.solution, f);
    } else {
      std::fflush(stdout);
      csdlma::oracle::write_policy_csv(report.model, report.solution, std::cout);
    }
    return 0;
  } catch (const csdlma::oracle::StateCapExceeded& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
