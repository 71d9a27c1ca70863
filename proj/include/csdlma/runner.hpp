#pragma once

#include "csdlma/config.hpp"
#include "csdlma/metrics.hpp"
#include "csdlma/oracle.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace csdlma {

/// Seed of batch member k, derived from the master seed by label.
std::uint64_t seed_for(const ExperimentConfig& cfg, int index);

/// Legacy mix seen by a model-aware node standing in for the subject (or
/// added alongside everything when there is no subject).
std::vector<LegacyConfig> oracle_mix(const ExperimentConfig& cfg);

struct OracleReport {
  double gain = 0.0;
  double wait_always = 0.0;
  std::size_t states = 0;
  oracle::EnvModel model;
  oracle::OracleSolution solution;
};

/// Builds and solves the oracle for the config's legacy mix.
OracleReport bench_oracle(const ExperimentConfig& cfg, oracle::BuildOptions options = {});

struct SeedRun {
  int index = 0;
  std::uint64_t seed = 0;
  std::optional<ThroughputSeries> series;
  std::optional<std::string> fault;
};

/// Runs one batch member. `checkpoint_dir`, when set, receives parameter
/// checkpoints and the optional replay dump for this seed.
SeedRun run_seed(const ExperimentConfig& cfg, int index,
                 const std::optional<std::filesystem::path>& checkpoint_dir = std::nullopt);

struct ExperimentResult {
  std::vector<SeedRun> runs;
  std::optional<ThroughputSeries> mean;
  std::optional<double> oracle_gain;
  std::string oracle_error;
  nlohmann::json summary;
};

/// Runs every seed (up to `jobs` at a time) and, if `out` is given, writes
/// seed_<k>.csv, mean.csv and summary.json there.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::optional<std::filesystem::path>& out, int jobs = 1);

/// Runs two configs that differ in their subject node and writes a/ and b/
/// plus comparison.json.
nlohmann::json run_compare(const ExperimentConfig& a, const ExperimentConfig& b,
                           const std::optional<std::filesystem::path>& out, int jobs = 1);

}  // namespace csdlma
