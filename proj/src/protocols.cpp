#include "csdlma/protocols.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace csdlma {

void TdmaConfig::validate() const {
  if (frame_slots < 1) throw std::invalid_argument("tdma: frame must hold at least one slot");
  if (slot_ratio < 1) throw std::invalid_argument("tdma: slot_ratio must be >= 1");
  std::set<int> seen;
  for (int s : pattern) {
    if (s < 0 || s >= frame_slots) {
      throw std::invalid_argument("tdma: pattern slot " + std::to_string(s) +
                                  " outside frame of " + std::to_string(frame_slots));
    }
    if (!seen.insert(s).second) {
      throw std::invalid_argument("tdma: duplicate pattern slot " + std::to_string(s));
    }
  }
}

void AlohaConfig::validate() const {
  if (slot_ratio < 1) throw std::invalid_argument("aloha: slot_ratio must be >= 1");
  switch (variant) {
    case AlohaVariant::kQ:
      if (!(q >= 0.0 && q <= 1.0)) {
        throw std::invalid_argument("aloha: q must lie in [0, 1]");
      }
      break;
    case AlohaVariant::kExponentialBackoff:
      if (max_stage < 0 || max_stage > 20) {
        throw std::invalid_argument("aloha: max_stage must lie in [0, 20]");
      }
      [[fallthrough]];
    case AlohaVariant::kFixedWindow:
      if (window < 1) throw std::invalid_argument("aloha: window must be >= 1");
      break;
  }
}

void WifiConfig::validate() const {
  if (window < 1) throw std::invalid_argument("wifi: window must be >= 1");
  if (max_stage < 0 || max_stage > 20) {
    throw std::invalid_argument("wifi: max_stage must lie in [0, 20]");
  }
  if (packet_length < 1) throw std::invalid_argument("wifi: packet_length must be >= 1");
}

int packet_length(const LegacyConfig& cfg) {
  struct Visitor {
    int operator()(const TdmaConfig& c) const { return c.slot_ratio; }
    int operator()(const AlohaConfig& c) const { return c.slot_ratio; }
    int operator()(const WifiConfig& c) const { return c.packet_length; }
  };
  return std::visit(Visitor{}, cfg);
}

std::string_view kind_name(const LegacyConfig& cfg) {
  struct Visitor {
    std::string_view operator()(const TdmaConfig&) const { return "tdma"; }
    std::string_view operator()(const AlohaConfig& c) const {
      switch (c.variant) {
        case AlohaVariant::kQ: return "q_aloha";
        case AlohaVariant::kFixedWindow: return "fw_aloha";
        case AlohaVariant::kExponentialBackoff: return "eb_aloha";
      }
      return "aloha";
    }
    std::string_view operator()(const WifiConfig&) const { return "wifi"; }
  };
  return std::visit(Visitor{}, cfg);
}

bool tdma_decide(const TdmaConfig& cfg, Slot t) {
  const auto ratio = static_cast<Slot>(cfg.slot_ratio);
  if (t % ratio != 0) return false;
  const auto tdma_slot = static_cast<int>((t / ratio) % static_cast<Slot>(cfg.frame_slots));
  return std::find(cfg.pattern.begin(), cfg.pattern.end(), tdma_slot) != cfg.pattern.end();
}

bool q_aloha_decide(const AlohaConfig& cfg, Slot t, Rng& rng) {
  if (t % static_cast<Slot>(cfg.slot_ratio) != 0) {
    throw std::logic_error("q_aloha_decide: called inside an ALOHA slot");
  }
  return rng.bernoulli(cfg.q);
}

int contention_window(int initial_window, int stage) { return initial_window << stage; }

void backoff_after_packet(BackoffState& state, int initial_window, int max_stage,
                          bool exponential, bool success, Rng& rng) {
  if (exponential) {
    state.stage = success ? 0 : std::min(state.stage + 1, max_stage);
  }
  const int w = contention_window(initial_window, state.stage);
  state.counter = static_cast<int>(rng.below(static_cast<std::uint64_t>(w)));
}

bool window_aloha_decide(BackoffState& state, const AlohaConfig& cfg, Slot t) {
  if (t % static_cast<Slot>(cfg.slot_ratio) != 0) return false;
  if (state.counter == 0) return true;
  --state.counter;
  return false;
}

bool wifi_ready(const BackoffState& state) { return state.counter == 0; }

void wifi_sense(BackoffState& state, bool busy) {
  if (!busy && state.counter > 0) --state.counter;
}

TdmaNode::TdmaNode(TdmaConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

AlohaNode::AlohaNode(AlohaConfig cfg, Rng rng) : cfg_(cfg), rng_(rng) {
  cfg_.validate();
  if (cfg_.variant != AlohaVariant::kQ) {
    backoff_.counter = static_cast<int>(rng_.below(static_cast<std::uint64_t>(cfg_.window)));
  }
}

std::string_view AlohaNode::kind() const { return kind_name(LegacyConfig{cfg_}); }

bool AlohaNode::wants_to_transmit(Slot t) {
  if (t % static_cast<Slot>(cfg_.slot_ratio) != 0) return false;
  if (cfg_.variant == AlohaVariant::kQ) return q_aloha_decide(cfg_, t, rng_);
  return window_aloha_decide(backoff_, cfg_, t);
}

void AlohaNode::on_feedback(Slot, Observation fb) {
  if (cfg_.variant == AlohaVariant::kQ) return;
  if (fb != Observation::kSuccessful && fb != Observation::kCollided) return;
  backoff_after_packet(backoff_, cfg_.window, cfg_.max_stage,
                       cfg_.variant == AlohaVariant::kExponentialBackoff,
                       fb == Observation::kSuccessful, rng_);
}

WifiNode::WifiNode(WifiConfig cfg, Rng rng) : cfg_(cfg), rng_(rng) {
  cfg_.validate();
  backoff_.counter = static_cast<int>(rng_.below(static_cast<std::uint64_t>(cfg_.window)));
}

bool WifiNode::wants_to_transmit(Slot) {
  transmitting_ = wifi_ready(backoff_);
  return transmitting_;
}

void WifiNode::on_feedback(Slot, Observation fb) {
  if (transmitting_) {
    if (fb == Observation::kSuccessful || fb == Observation::kCollided) {
      backoff_after_packet(backoff_, cfg_.window, cfg_.max_stage, true,
                           fb == Observation::kSuccessful, rng_);
      transmitting_ = false;
    }
    return;
  }
  wifi_sense(backoff_, fb == Observation::kBusy);
}

std::unique_ptr<LegacyNode> make_legacy_node(const LegacyConfig& cfg, Rng rng) {
  if (const auto* t = std::get_if<TdmaConfig>(&cfg)) return std::make_unique<TdmaNode>(*t);
  if (const auto* a = std::get_if<AlohaConfig>(&cfg)) return std::make_unique<AlohaNode>(*a, rng);
  return std::make_unique<WifiNode>(std::get<WifiConfig>(cfg), rng);
}

}  // namespace csdlma
