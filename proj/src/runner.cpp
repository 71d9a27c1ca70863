#include "csdlma/runner.hpp"
#include "csdlma/simulation.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

namespace csdlma {

using nlohmann::json;

namespace fs = std::filesystem;

std::uint64_t seed_for(const ExperimentConfig& cfg, int index) {
  return derive_seed(cfg.seed, "seed/" + std::to_string(index));
}

std::vector<LegacyConfig> oracle_mix(const ExperimentConfig& cfg) {
  std::vector<LegacyConfig> mix;
  for (const auto& n : cfg.nodes) {
    if (n.subject) continue;
    if (n.dlma) throw std::invalid_argument("dlma node cannot be part of the oracle's legacy mix");
    mix.push_back(n.legacy);
  }
  return mix;
}

OracleReport bench_oracle(const ExperimentConfig& cfg, oracle::BuildOptions options) {
  const auto mix = oracle_mix(cfg);
  OracleReport r;
  r.model = oracle::build_model(mix, options);
  r.solution = oracle::relative_value_iteration(r.model);
  r.gain = r.solution.gain;
  r.states = r.model.num_states();
  r.wait_always = oracle::evaluate_policy(r.model, oracle::constant_policy(r.model, Action::kSense));
  return r;
}

namespace {

void write_checkpoint(const DlmaController& c, const fs::path& path) {
  std::ofstream out(path);
  nn::save_parameters(c.trainer().online().parameters(), out);
}

json cumulative_json(const ThroughputSeries& s) {
  json nodes = json::object();
  for (std::size_t i = 0; i < s.num_nodes(); ++i) {
    nodes[s.node_names()[i]] = s.node_cumulative(i, s.slots()).value_or(0.0);
  }
  return {{"sum", s.cumulative(s.slots()).value_or(0.0)}, {"nodes", nodes}};
}

json series_summary(const ThroughputSeries& s, std::size_t window, std::optional<double> gain) {
  json j = {{"final_cumulative", cumulative_json(s)}};
  if (auto st = s.short_term(s.slots(), window)) j["final_short_term_sum"] = *st;
  if (gain) {
    const auto t = slots_to_reach(s, 0.9 * *gain, window);
    j["slots_to_90pct_of_gain"] = t ? json(*t) : json(nullptr);
  }
  return j;
}

}  // namespace

SeedRun run_seed(const ExperimentConfig& cfg, int index,
                 const std::optional<fs::path>& checkpoint_dir) {
  SeedRun run{index, seed_for(cfg, index), std::nullopt, std::nullopt};
  try {
    std::vector<Participant> ps;
    DlmaController* dlma = nullptr;
    for (const auto& n : cfg.nodes) {
      const std::uint64_t node_seed = derive_seed(run.seed, "node/" + n.name);
      if (n.dlma) {
        const auto& e = cfg.agent.epsilon;
        auto c = std::make_unique<DlmaController>(
            cfg.agent.trainer, EpsilonSchedule(e.initial, e.decay, e.floor), node_seed);
        dlma = c.get();
        ps.push_back(make_controlled_participant(n.name, std::move(c)));
      } else {
        ps.push_back(make_legacy_participant(n.name, make_legacy_node(n.legacy, Rng(node_seed))));
      }
    }
    Simulation sim(std::move(ps));
    const std::string stem = "seed_" + std::to_string(index);
    for (std::uint64_t t = 0; t < cfg.slots; ++t) {
      sim.step();
      if (dlma && checkpoint_dir && cfg.checkpoint_every > 0 && (t + 1) % cfg.checkpoint_every == 0) {
        write_checkpoint(*dlma, *checkpoint_dir / (stem + "_params.txt"));
      }
    }
    if (dlma && checkpoint_dir) {
      write_checkpoint(*dlma, *checkpoint_dir / (stem + "_params.txt"));
      if (cfg.dump_replay) {
        std::ofstream out(*checkpoint_dir / (stem + "_replay.csv"));
        dlma->trainer().buffer().write_csv(out);
      }
    }
    run.series = sim.series();
  } catch (const std::exception& e) {
    run.fault = e.what();
  }
  return run;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::optional<fs::path>& out,
                                int jobs) {
  if (out) fs::create_directories(*out);
  ExperimentResult result;
  result.runs.resize(static_cast<std::size_t>(cfg.seeds));

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < cfg.seeds; k = next++) {
      result.runs[static_cast<std::size_t>(k)] = run_seed(cfg, k, out);
    }
  };
  const int threads = std::max(1, std::min(jobs, cfg.seeds));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  try {
    result.oracle_gain = bench_oracle(cfg).gain;
  } catch (const std::exception& e) {
    result.oracle_error = e.what();
  }

  std::vector<ThroughputSeries> good;
  json seeds = json::array();
  for (const auto& r : result.runs) {
    json j = {{"index", r.index}, {"seed", r.seed}};
    if (r.fault) {
      j["fault"] = *r.fault;
    } else {
      j.update(series_summary(*r.series, cfg.window, result.oracle_gain));
      good.push_back(*r.series);
      if (out) {
        std::ofstream f(*out / ("seed_" + std::to_string(r.index) + ".csv"));
        r.series->write_csv(f, cfg.window);
      }
    }
    seeds.push_back(j);
  }
  if (!good.empty()) result.mean = ThroughputSeries::mean(good);

  json summary = {{"config", to_json(cfg)}, {"seeds", seeds}};
  if (result.oracle_gain) {
    summary["oracle"] = {{"gain", *result.oracle_gain}};
  } else {
    summary["oracle"] = {{"error", result.oracle_error}};
  }
  if (result.mean) {
    summary["mean"] = series_summary(*result.mean, cfg.window, result.oracle_gain);
    if (out) {
      std::ofstream f(*out / "mean.csv");
      result.mean->write_csv(f, cfg.window);
    }
  }
  if (out) {
    std::ofstream f(*out / "summary.json");
    f << summary.dump(2) << '\n';
  }
  result.summary = std::move(summary);
  return result;
}

json run_compare(const ExperimentConfig& a, const ExperimentConfig& b,
                 const std::optional<fs::path>& out, int jobs) {
  auto sub = [&](const char* name) { return out ? std::optional<fs::path>(*out / name) : std::nullopt; };
  const ExperimentResult ra = run_experiment(a, sub("a"), jobs);
  const ExperimentResult rb = run_experiment(b, sub("b"), jobs);

  auto side = [](const ExperimentConfig& cfg, const ExperimentResult& r) {
    json j;
    const auto s = cfg.subject();
    j["subject"] = s ? json(cfg.nodes[*s].name) : json(nullptr);
    if (r.mean) j["final_cumulative"] = cumulative_json(*r.mean);
    if (r.oracle_gain) j["oracle_gain"] = *r.oracle_gain;
    return j;
  };
  json table = json::array();
  if (ra.mean && rb.mean) {
    // Pair nodes by position; the subject rows differ by design.
    const std::size_t n = std::min(ra.mean->num_nodes(), rb.mean->num_nodes());
    for (std::size_t i = 0; i < n; ++i) {
      table.push_back({{"a_node", ra.mean->node_names()[i]},
                       {"b_node", rb.mean->node_names()[i]},
                       {"a_cumulative", *ra.mean->node_cumulative(i, ra.mean->slots())},
                       {"b_cumulative", *rb.mean->node_cumulative(i, rb.mean->slots())}});
    }
    table.push_back({{"a_node", "sum"},
                     {"b_node", "sum"},
                     {"a_cumulative", *ra.mean->cumulative(ra.mean->slots())},
                     {"b_cumulative", *rb.mean->cumulative(rb.mean->slots())}});
  }
  json cmp = {{"a", side(a, ra)}, {"b", side(b, rb)}, {"paired", table}};
  if (out) {
    std::ofstream f(*out / "comparison.json");
    f << cmp.dump(2) << '\n';
  }
  return cmp;
}

}  // namespace csdlma
