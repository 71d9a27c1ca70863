// End-to-end checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. The learning experiments run at full length and
// take hours on one core; --only selects a subset.

#include "csdlma/config.hpp"
#include "csdlma/oracle.hpp"
#include "csdlma/replay.hpp"
#include "csdlma/runner.hpp"
#include "support/nn_oracle.hpp"
#include "support/replay_oracle.hpp"
#include "support/scenarios.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"

namespace fs = std::filesystem;
using namespace csdlma;
using namespace csdlma::testing;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

struct Context {
  fs::path cli;
  fs::path configs;
  fs::path work;
  int jobs = 1;
};

ExperimentResult run_logged(const ExperimentConfig& cfg, const fs::path& out, int jobs) {
  const auto start = std::chrono::steady_clock::now();
  std::cerr << "  running " << out.filename().string() << ": " << cfg.seeds << " x " << cfg.slots
            << " slots" << std::endl;
  ExperimentResult r = run_experiment(cfg, out, jobs);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "  done in " << fmt("%.0f", secs) << " s" << std::endl;
  for (const auto& run : r.runs) {
    if (run.fault) throw std::runtime_error(out.filename().string() + " seed " +
                                            std::to_string(run.index) + ": " + *run.fault);
  }
  return r;
}

// ---------------------------------------------------------------------------

Verdict gradients(Context&) {
  double worst = 0.0;
  std::string where;
  for (auto arch : {nn::Architecture::kDense, nn::Architecture::kRecurrent}) {
    for (std::uint64_t k = 0; k < 20; ++k) {
      auto c = random_gradient_case(arch, 1000 + k);
      const auto check = check_gradient(c.net, c.inputs, c.actions, c.targets);
      if (check.max_relative_error > worst) {
        worst = check.max_relative_error;
        where = std::string(nn::to_string(arch)) + " case " + std::to_string(k);
      }
    }
  }
  return {worst <= 1e-4, "max relative error " + fmt("%.2e", worst) + " (" + where + "), limit 1e-4"};
}

Verdict replay(Context&) {
  Rng rng(77);
  long windows = 0;
  int mismatches = 0;
  for (int trace = 0; trace < 100; ++trace) {
    const auto tr = random_symbol_trace(300, rng);
    for (int m : {2, 5, 40}) {
      for (int n : {1, 4}) {
        const long c = compare_with_reference(tr, 500, m, n);
        if (c <= 0) {
          ++mismatches;
        } else {
          windows += c;
        }
      }
    }
  }
  return {mismatches == 0,
          std::to_string(windows) + " windows equal to the full store, " + std::to_string(mismatches) +
              " mismatching cases"};
}

Verdict reward_backprop(Context&) {
  Rng rng(5);
  int bad = 0, cases = 0;
  for (int r : {0, 1, 2, 3, 4, 8}) {
    for (int trial = 0; trial < 200; ++trial, ++cases) {
      ExperienceBuffer b(40);
      const std::size_t fill = rng.below(60);
      for (std::size_t k = 0; k < fill; ++k) {
        b.store({ChannelSymbol::kSenseIdle, Action::kSense, static_cast<double>(rng.below(9)),
                 ChannelSymbol::kSenseIdle});
      }
      b.store({ChannelSymbol::kTransmitSuccessful, Action::kTransmit, static_cast<double>(r),
               ChannelSymbol::kTransmitSuccessful});
      std::vector<double> before;
      for (std::size_t i = 0; i < b.size(); ++i) before.push_back(b.at(i).reward);
      b.backpropagate_reward(r);
      const std::size_t n = b.size();
      const std::size_t ones = r > 1 ? std::min<std::size_t>(r, n) : 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double want = i + ones >= n ? 1.0 : before[i];
        if (b.at(i).reward != want) {
          ++bad;
          break;
        }
      }
    }
  }
  return {bad == 0, std::to_string(cases) + " buffers, " + std::to_string(bad) + " wrong"};
}

Verdict oracle_sanity(Context&) {
  bool ok = true;
  std::ostringstream d;
  {
    const std::vector<LegacyConfig> mix{tdma_two_of_five()};
    const auto sol = oracle::relative_value_iteration(oracle::build_model(mix));
    const bool pass = std::abs(sol.gain - 1.0) <= 1e-9;
    ok &= pass;
    d << "tdma-only g=" << fmt("%.9f", sol.gain);
  }
  for (double q : {0.2, 0.4, 0.7}) {
    const std::vector<LegacyConfig> mix{q_aloha(q, 4)};
    const auto model = oracle::build_model(mix);
    const auto wait = oracle::constant_policy(model, Action::kSense);
    const double exact = oracle::evaluate_policy(model, wait);
    Rng rng(static_cast<std::uint64_t>(1000 * q));
    const auto roll = oracle::simulate_policy(model, wait, 1'000'000, rng);
    const bool pass = std::abs(exact - q) <= 1e-9 && std::abs(roll.mean - q) <= 3 * roll.standard_error;
    ok &= pass;
    d << "; wait q=" << q << ": " << fmt("%.6f", exact) << "/" << fmt("%.6f", roll.mean);
  }
  {
    const auto mix = mix_aloha_tdma();
    const auto model = oracle::build_model(mix);
    const auto sol = oracle::relative_value_iteration(model);
    Rng rng(2024);
    const auto roll = oracle::simulate_policy(model, sol.policy, 10'000'000, rng);
    const double z = std::abs(roll.mean - sol.gain) / roll.standard_error;
    const bool pass = z <= 3.0 && std::abs(sol.gain - kGainAlohaTdma) <= 1e-7;
    ok &= pass;
    d << "; mix g=" << fmt("%.6f", sol.gain) << " rollout " << fmt("%.6f", roll.mean) << " ("
      << fmt("%.2f", z) << " sigma)";
  }
  return {ok, d.str()};
}

std::string slots_text(const std::optional<std::size_t>& at, std::uint64_t horizon) {
  return at ? std::to_string(*at) : ">" + std::to_string(horizon);
}

Verdict fig5(Context& ctx) {
  const double level = 0.9 * kGainAlohaTdma;
  // Only the first 6000 slots decide this, so 10k is plenty for both.
  auto rb_cfg = load_config(ctx.configs / "fig5_rnn_rb.json");
  auto os_cfg = load_config(ctx.configs / "fig5_rnn_one_step.json");
  rb_cfg.slots = os_cfg.slots = 10000;
  const auto rb = run_logged(rb_cfg, ctx.work / "fig5_rnn_rb", ctx.jobs);
  const auto os = run_logged(os_cfg, ctx.work / "fig5_rnn_one_step", ctx.jobs);
  const std::size_t window = os_cfg.window;
  const auto rb_at = slots_to_reach(*rb.mean, level, window);
  const auto os_at = slots_to_reach(*os.mean, level, window);
  const bool fast = rb_at && *rb_at <= 6000;
  const bool faster = rb_at && (!os_at || *rb_at < *os_at);
  return {fast && faster, "0.9g=" + fmt("%.4f", level) + " reached at rb " +
                              slots_text(rb_at, rb.mean->slots()) + ", one-step " +
                              slots_text(os_at, os.mean->slots()) + " (rb limit 6000)"};
}

Verdict fig6(Context& ctx) {
  const auto run =
      run_logged(load_config(ctx.configs / "fig6_dlma.json"), ctx.work / "fig6_dlma", ctx.jobs);
  const ThroughputSeries& dlma = *run.mean;
  const double dlma_sum = *dlma.cumulative(dlma.slots());
  bool ok = dlma_sum >= 0.9 * kGainAlohaTdma;
  std::ostringstream d;
  d << "dlma cumulative " << fmt("%.4f", dlma_sum) << " (0.9g=" << fmt("%.4f", 0.9 * kGainAlohaTdma)
    << ")";
  for (int r = 1; r <= 4; ++r) {
    const auto cfg = load_config(ctx.configs / ("fig6_wifi_r" + std::to_string(r) + ".json"));
    const auto wifi = run_logged(cfg, ctx.work / ("fig6_wifi_r" + std::to_string(r)), ctx.jobs);
    const double wifi_sum = *wifi.mean->cumulative(wifi.mean->slots());
    ok &= dlma_sum > wifi_sum;
    d << "; wifi R=" << r << " " << fmt("%.4f", wifi_sum);
    if (r == 2) {
      d << " [nodes";
      for (std::size_t n = 0; n < 3; ++n) {
        const double a = *dlma.node_cumulative(n, dlma.slots());
        const double b = *wifi.mean->node_cumulative(n, wifi.mean->slots());
        ok &= a > b;
        d << " " << dlma.node_names()[n] << " " << fmt("%.4f", a) << ">" << fmt("%.4f", b);
      }
      d << "]";
    }
  }
  return {ok, d.str()};
}

Verdict fig7(Context& ctx) {
  struct Case {
    const char* config;
    double gain;
  };
  const Case cases[] = {{"fig7_q_aloha", kGainQAloha},
                        {"fig7_fw_aloha", kGainWindowTwo},
                        {"fig7_eb_aloha", kGainWindowTwo},
                        {"fig7_aloha_tdma", kGainShortAlohaTdma}};
  bool ok = true;
  std::ostringstream d;
  for (const auto& c : cases) {
    const auto cfg = load_config(ctx.configs / (std::string(c.config) + ".json"));
    const double solved = bench_oracle(cfg).gain;
    ok &= std::abs(solved - c.gain) <= 1e-7;
    const auto r = run_logged(cfg, ctx.work / c.config, ctx.jobs);
    const std::size_t end = r.mean->slots();
    const double tail = mean_short_term(*r.mean, end - 10000, end, cfg.window);
    ok &= tail >= 0.9 * c.gain;
    if (d.tellp() > 0) d << "; ";
    d << c.config << " " << fmt("%.4f", tail) << "/" << fmt("%.4f", 0.9 * c.gain);
  }
  return {ok, "final-10k mean short-term vs 0.9g: " + d.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

Verdict determinism(Context& ctx) {
  const fs::path config = ctx.configs / "fig5_rnn_rb.json";
  std::vector<std::map<std::string, std::string>> outputs;
  for (const char* name : {"determinism_a", "determinism_b"}) {
    const fs::path out = ctx.work / name;
    fs::remove_all(out);
    const std::string cmd = "\"" + ctx.cli.string() + "\" run --config \"" + config.string() +
                            "\" --slots 1500 --seeds 2 --out \"" + out.string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "cli run failed: " + cmd};
    outputs.push_back(tree(out));
  }
  std::size_t csvs = 0;
  for (const auto& [k, v] : outputs[0]) csvs += k.ends_with(".csv");
  const bool same = outputs[0] == outputs[1] && csvs >= 3;
  return {same, std::to_string(outputs[0].size()) + " files (" + std::to_string(csvs) +
                    " csv) " + (same ? "byte-identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  Context ctx;
  std::string only;
  app.add_option("--cli", ctx.cli, "csdlma executable")->required();
  app.add_option("--configs", ctx.configs, "Config directory")->required();
  app.add_option("--work", ctx.work, "Scratch directory for run outputs")->required();
  app.add_option("--jobs", ctx.jobs, "Seeds run concurrently");
  app.add_option("--only", only, "Comma-separated criterion numbers");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(ctx.work);

  std::set<int> selected;
  std::stringstream ss(only);
  for (std::string tok; std::getline(ss, tok, ',');) selected.insert(std::stoi(tok));

  const std::vector<std::pair<const char*, std::function<Verdict(Context&)>>> criteria{
      {"gradient check", gradients},
      {"replay fidelity", replay},
      {"reward backpropagation", reward_backprop},
      {"oracle sanity", oracle_sanity},
      {"rb vs one-step convergence", fig5},
      {"dlma vs wifi replacement", fig6},
      {"aloha variants near optimal", fig7},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(number)) continue;
    std::cerr << "[" << number << "] " << criteria[i].first << std::endl;
    Verdict v;
    try {
      v = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << number << "] " << criteria[i].first << ": "
              << v.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
