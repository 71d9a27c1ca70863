#include "csdlma/env.hpp"
#include "csdlma/protocols.hpp"
#include "support/stats.hpp"

#include <gtest/gtest.h>

#include <map>

namespace csdlma {
namespace {

using csdlma::testing::binomial_sigma;
using csdlma::testing::chi_square_quantile;
using csdlma::testing::chi_square_uniform;

TdmaConfig two_of_five() { return TdmaConfig{5, {0, 1}, 4}; }

TEST(Tdma, DecisionsFollowPattern) {
  const TdmaConfig cfg = two_of_five();
  EXPECT_TRUE(tdma_decide(cfg, 0));
  EXPECT_TRUE(tdma_decide(cfg, 4));
  EXPECT_FALSE(tdma_decide(cfg, 8));
  EXPECT_FALSE(tdma_decide(cfg, 2));  // inside a TDMA slot
  EXPECT_TRUE(tdma_decide(cfg, 20));
  EXPECT_EQ(cfg.frame_length(), 20);
}

TEST(Tdma, ValidationRejectsBadPatterns) {
  EXPECT_THROW((TdmaConfig{5, {5}, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((TdmaConfig{5, {1, 1}, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((TdmaConfig{5, {0}, 0}.validate()), std::invalid_argument);
  EXPECT_THROW((TdmaConfig{0, {}, 1}.validate()), std::invalid_argument);
}

// Drives one legacy node on its own channel and returns the occupied slots.
std::vector<bool> occupancy_alone(LegacyNode& node, int slots) {
  Env env({node.packet_length()});
  std::vector<bool> busy;
  for (int t = 0; t < slots; ++t) {
    std::vector<std::optional<Action>> d(1);
    if (!env.in_flight(0)) {
      d[0] = node.wants_to_transmit(static_cast<Slot>(t)) ? Action::kTransmit : Action::kSense;
    }
    const StepResult r = env.step(d);
    node.on_feedback(static_cast<Slot>(t), r.feedback[0]);
    busy.push_back(!r.outcome.busy_nodes.empty());
  }
  return busy;
}

TEST(Tdma, OccupancyPerFrameIsExact) {
  for (const TdmaConfig& cfg : {two_of_five(), TdmaConfig{7, {0, 3, 6}, 2}, TdmaConfig{3, {}, 5}}) {
    TdmaNode node(cfg);
    const auto busy = occupancy_alone(node, cfg.frame_length() * 6);
    for (int f = 0; f < 6; ++f) {
      int count = 0;
      for (int k = 0; k < cfg.frame_length(); ++k) count += busy[f * cfg.frame_length() + k];
      EXPECT_EQ(count, static_cast<int>(cfg.pattern.size()) * cfg.slot_ratio);
    }
  }
}

AlohaConfig q_aloha(double q, int ratio) {
  AlohaConfig c;
  c.variant = AlohaVariant::kQ;
  c.q = q;
  c.slot_ratio = ratio;
  return c;
}

AlohaConfig window_aloha(AlohaVariant v, int w, int m, int ratio = 1) {
  AlohaConfig c;
  c.variant = v;
  c.window = w;
  c.max_stage = m;
  c.slot_ratio = ratio;
  return c;
}

TEST(QAloha, ExtremeProbabilities) {
  Rng rng(3);
  for (Slot t = 0; t < 400; t += 4) {
    EXPECT_FALSE(q_aloha_decide(q_aloha(0.0, 4), t, rng));
    EXPECT_TRUE(q_aloha_decide(q_aloha(1.0, 4), t, rng));
  }
}

TEST(QAloha, EmpiricalRateMatchesQ) {
  Rng rng(derive_seed(7, "node/aloha"));
  const AlohaConfig cfg = q_aloha(0.4, 1);
  const int n = 100000;
  int hits = 0;
  for (int t = 0; t < n; ++t) hits += q_aloha_decide(cfg, static_cast<Slot>(t), rng);
  const double rate = hits / static_cast<double>(n);
  EXPECT_NEAR(rate, 0.4, 0.01);
  EXPECT_NEAR(rate, 0.4, 3.0 * binomial_sigma(0.4, n));
}

TEST(QAloha, MidSlotCallIsAContractViolation) {
  Rng rng(1);
  EXPECT_THROW(q_aloha_decide(q_aloha(0.4, 4), 2, rng), std::logic_error);
}

TEST(QAloha, NodeOnlyStartsAtSlotBoundaries) {
  AlohaNode node(q_aloha(1.0, 4), Rng(1));
  EXPECT_TRUE(node.wants_to_transmit(8));
  EXPECT_FALSE(node.wants_to_transmit(9));
}

TEST(QAloha, ConfigRejectsBadProbability) {
  EXPECT_THROW(q_aloha(1.3, 1).validate(), std::invalid_argument);
  EXPECT_THROW(q_aloha(-0.1, 1).validate(), std::invalid_argument);
  EXPECT_THROW(q_aloha(0.5, 0).validate(), std::invalid_argument);
}

TEST(Backoff, ContentionWindowDoubles) {
  EXPECT_EQ(contention_window(2, 0), 2);
  EXPECT_EQ(contention_window(2, 1), 4);
  EXPECT_EQ(contention_window(2, 2), 8);
}

TEST(Backoff, ExponentialStageCapsAndResets) {
  Rng rng(5);
  BackoffState s;
  backoff_after_packet(s, 2, 2, true, false, rng);
  backoff_after_packet(s, 2, 2, true, false, rng);
  EXPECT_EQ(contention_window(2, s.stage), 8);
  backoff_after_packet(s, 2, 2, true, false, rng);
  EXPECT_EQ(contention_window(2, s.stage), 8);
  EXPECT_LT(s.counter, 8);
  backoff_after_packet(s, 2, 2, true, true, rng);
  EXPECT_EQ(contention_window(2, s.stage), 2);
  EXPECT_LT(s.counter, 2);
}

TEST(Backoff, FixedWindowIgnoresOutcome) {
  Rng rng(5);
  BackoffState s;
  for (int k = 0; k < 50; ++k) {
    backoff_after_packet(s, 3, 0, false, k % 2 == 0, rng);
    EXPECT_EQ(s.stage, 0);
    EXPECT_GE(s.counter, 0);
    EXPECT_LT(s.counter, 3);
  }
}

TEST(WindowAloha, CounterCountsWaitingSlots) {
  const AlohaConfig cfg = window_aloha(AlohaVariant::kFixedWindow, 4, 0, 2);
  BackoffState s{2, 0};
  EXPECT_FALSE(window_aloha_decide(s, cfg, 0));
  EXPECT_FALSE(window_aloha_decide(s, cfg, 1));  // mid-slot: no change
  EXPECT_EQ(s.counter, 1);
  EXPECT_FALSE(window_aloha_decide(s, cfg, 2));
  EXPECT_TRUE(window_aloha_decide(s, cfg, 4));
}

// Gap in ALOHA slots between consecutive transmissions of a lone FW node.
std::map<int, std::size_t> fw_gaps(int window, int slots, std::uint64_t seed) {
  AlohaNode node(window_aloha(AlohaVariant::kFixedWindow, window, 0), Rng(seed));
  const auto busy = occupancy_alone(node, slots);
  std::map<int, std::size_t> gaps;
  int last = -1;
  for (int t = 0; t < slots; ++t) {
    if (!busy[static_cast<std::size_t>(t)]) continue;
    if (last >= 0) ++gaps[t - last - 1];
    last = t;
  }
  return gaps;
}

TEST(WindowAloha, FixedWindowGapsAreUniform) {
  for (int w : {2, 4, 7}) {
    const auto gaps = fw_gaps(w, 200000, 11 + static_cast<std::uint64_t>(w));
    std::vector<std::size_t> counts;
    for (int g = 0; g < w; ++g) {
      counts.push_back(gaps.contains(g) ? gaps.at(g) : 0);
    }
    EXPECT_EQ(gaps.size(), static_cast<std::size_t>(w)) << "gap outside [0, W-1]";
    EXPECT_LT(chi_square_uniform(counts), chi_square_quantile(counts.size() - 1)) << "W=" << w;
  }
}

TEST(WindowAloha, ExponentialWindowStaysInRange) {
  // Two EB nodes and a greedy transmitter keep colliding.
  const AlohaConfig cfg = window_aloha(AlohaVariant::kExponentialBackoff, 2, 2, 2);
  AlohaNode a(cfg, Rng(1));
  AlohaNode b(cfg, Rng(2));
  Env env({2, 2, 1});
  Rng noise(3);
  for (int t = 0; t < 5000; ++t) {
    const Slot s = static_cast<Slot>(t);
    std::vector<std::optional<Action>> d(3);
    if (!env.in_flight(0)) d[0] = a.wants_to_transmit(s) ? Action::kTransmit : Action::kSense;
    if (!env.in_flight(1)) d[1] = b.wants_to_transmit(s) ? Action::kTransmit : Action::kSense;
    d[2] = noise.bernoulli(0.3) ? Action::kTransmit : Action::kSense;
    const StepResult r = env.step(d);
    a.on_feedback(s, r.feedback[0]);
    b.on_feedback(s, r.feedback[1]);
    for (const AlohaNode* n : {&a, &b}) {
      EXPECT_GE(n->backoff().stage, 0);
      EXPECT_LE(n->backoff().stage, 2);
      EXPECT_GE(n->backoff().counter, 0);
      EXPECT_LT(n->backoff().counter, contention_window(2, n->backoff().stage));
    }
  }
}

TEST(Wifi, CountsDownOnIdleOnly) {
  BackoffState s{3, 0};
  for (bool busy : {false, true, false}) {
    EXPECT_FALSE(wifi_ready(s));
    wifi_sense(s, busy);
  }
  EXPECT_FALSE(wifi_ready(s));
  wifi_sense(s, false);
  EXPECT_TRUE(wifi_ready(s));
}

// A WiFi node sharing the channel with a scripted occupant.
struct WifiHarness {
  WifiNode node;
  Env env;
  WifiHarness(WifiConfig cfg, std::uint64_t seed) : node(cfg, Rng(seed)), env({cfg.packet_length, 1}) {}

  // Returns the WiFi node's action in this slot (empty if mid-packet).
  std::optional<Action> step(bool other_transmits) {
    const Slot t = env.now();
    std::vector<std::optional<Action>> d(2);
    if (!env.in_flight(0)) d[0] = node.wants_to_transmit(t) ? Action::kTransmit : Action::kSense;
    d[1] = other_transmits ? Action::kTransmit : Action::kSense;
    const StepResult r = env.step(d);
    node.on_feedback(t, r.feedback[0]);
    return d[0];
  }
};

TEST(Wifi, TransmitsAfterCountdownWithFreeze) {
  // Find a seed whose initial draw from [0, W-1] is 3.
  WifiConfig cfg{4, 2, 1};
  std::uint64_t seed = 0;
  while (WifiNode(cfg, Rng(seed)).backoff().counter != 3) ++seed;
  WifiHarness h(cfg, seed);
  EXPECT_EQ(h.step(false), Action::kSense);
  EXPECT_EQ(h.step(true), Action::kSense);
  EXPECT_EQ(h.step(false), Action::kSense);
  EXPECT_EQ(h.step(false), Action::kSense);
  EXPECT_EQ(h.step(false), Action::kTransmit);
}

TEST(Wifi, ZeroCounterTransmitsImmediately) {
  WifiConfig cfg{2, 2, 3};
  std::uint64_t seed = 0;
  while (WifiNode(cfg, Rng(seed)).backoff().counter != 0) ++seed;
  WifiHarness h(cfg, seed);
  EXPECT_EQ(h.step(false), Action::kTransmit);
  EXPECT_EQ(h.step(false), std::nullopt);
  EXPECT_EQ(h.step(false), std::nullopt);
  EXPECT_EQ(h.node.backoff().stage, 0);
}

TEST(Wifi, CollisionRedrawsFromDoubledWindow) {
  WifiConfig cfg{2, 2, 1};
  std::map<int, std::size_t> draws;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    if (WifiNode(cfg, Rng(seed)).backoff().counter != 0) continue;
    WifiHarness h(cfg, seed);
    EXPECT_EQ(h.step(true), Action::kTransmit);  // collides with the occupant
    EXPECT_EQ(h.node.backoff().stage, 1);
    ++draws[h.node.backoff().counter];
  }
  EXPECT_EQ(draws.size(), 4u);
  EXPECT_EQ(draws.begin()->first, 0);
  EXPECT_EQ(draws.rbegin()->first, 3);
}

TEST(Protocols, SameSeedSameTrace) {
  const std::vector<LegacyConfig> cfgs{q_aloha(0.4, 4),
                                       window_aloha(AlohaVariant::kFixedWindow, 2, 0, 4),
                                       window_aloha(AlohaVariant::kExponentialBackoff, 2, 2, 4),
                                       WifiConfig{2, 2, 3}};
  for (const auto& cfg : cfgs) {
    auto a = make_legacy_node(cfg, Rng(42));
    auto b = make_legacy_node(cfg, Rng(42));
    EXPECT_EQ(occupancy_alone(*a, 2000), occupancy_alone(*b, 2000)) << kind_name(cfg);
  }
}

TEST(Protocols, KindNamesAndPacketLengths) {
  EXPECT_EQ(kind_name(LegacyConfig{two_of_five()}), "tdma");
  EXPECT_EQ(kind_name(LegacyConfig{q_aloha(0.4, 4)}), "q_aloha");
  EXPECT_EQ(kind_name(LegacyConfig{window_aloha(AlohaVariant::kFixedWindow, 2, 0)}), "fw_aloha");
  EXPECT_EQ(kind_name(LegacyConfig{window_aloha(AlohaVariant::kExponentialBackoff, 2, 2)}),
            "eb_aloha");
  EXPECT_EQ(kind_name(LegacyConfig{WifiConfig{}}), "wifi");
  EXPECT_EQ(packet_length(LegacyConfig{two_of_five()}), 4);
  EXPECT_EQ(packet_length(LegacyConfig{WifiConfig{2, 2, 3}}), 3);
}

}  // namespace
}  // namespace csdlma
