#pragma once

#include "csdlma/rng.hpp"
#include "csdlma/types.hpp"

#include <memory>
#include <string_view>
#include <variant>
#include <vector>

namespace csdlma {

// ---------------------------------------------------------------------------
// Configurations
// ---------------------------------------------------------------------------

/// Transmits in the TDMA slots listed in `pattern` of every frame of
/// `frame_slots` TDMA slots. One TDMA slot lasts `slot_ratio` basic slots.
struct TdmaConfig {
  int frame_slots = 1;
  std::vector<int> pattern;
  int slot_ratio = 1;

  int frame_length() const { return frame_slots * slot_ratio; }
  void validate() const;
};

enum class AlohaVariant : std::uint8_t { kQ, kFixedWindow, kExponentialBackoff };

struct AlohaConfig {
  AlohaVariant variant = AlohaVariant::kQ;
  double q = 0.0;     // kQ only
  int window = 1;     // initial window W, kFixedWindow / kExponentialBackoff
  int max_stage = 0;  // m, kExponentialBackoff only
  int slot_ratio = 1;

  void validate() const;
};

/// Simplified CSMA/CA: counts down on idle basic slots, freezes on busy,
/// transmits `packet_length` basic slots once the counter is zero.
struct WifiConfig {
  int window = 2;
  int max_stage = 2;
  int packet_length = 1;

  void validate() const;
};

using LegacyConfig = std::variant<TdmaConfig, AlohaConfig, WifiConfig>;

int packet_length(const LegacyConfig& cfg);
std::string_view kind_name(const LegacyConfig& cfg);

// ---------------------------------------------------------------------------
// Decision rules
// ---------------------------------------------------------------------------

bool tdma_decide(const TdmaConfig& cfg, Slot t);

/// Bernoulli(q) draw. Only valid at ALOHA slot boundaries.
bool q_aloha_decide(const AlohaConfig& cfg, Slot t, Rng& rng);

/// Counter and backoff stage shared by FW-ALOHA, EB-ALOHA and WiFi.
struct BackoffState {
  int counter = 0;
  int stage = 0;
};

/// W * 2^stage.
int contention_window(int initial_window, int stage);

/// Applies the outcome of the node's last packet: EB doubles the window on
/// collision (capped at stage m) and resets it on success; FW keeps W.
/// Then redraws the counter uniformly on [0, window - 1].
void backoff_after_packet(BackoffState& state, int initial_window, int max_stage,
                          bool exponential, bool success, Rng& rng);

/// FW/EB-ALOHA decision at an ALOHA slot boundary: transmit when the counter
/// is zero, otherwise spend one waiting slot.
bool window_aloha_decide(BackoffState& state, const AlohaConfig& cfg, Slot t);

/// WiFi, called when the node is free at the start of a basic slot.
bool wifi_ready(const BackoffState& state);

/// WiFi carrier sense result for a basic slot it did not transmit in.
void wifi_sense(BackoffState& state, bool busy);

// ---------------------------------------------------------------------------
// Node state machines
// ---------------------------------------------------------------------------

class LegacyNode {
 public:
  virtual ~LegacyNode() = default;

  virtual std::string_view kind() const = 0;
  virtual int packet_length() const = 0;

  /// Called at the start of slot t whenever the node is not mid-packet.
  virtual bool wants_to_transmit(Slot t) = 0;

  /// Called at the end of every slot with the node's own feedback.
  virtual void on_feedback(Slot /*t*/, Observation /*fb*/) {}
};

class TdmaNode final : public LegacyNode {
 public:
  explicit TdmaNode(TdmaConfig cfg);
  std::string_view kind() const override { return "tdma"; }
  int packet_length() const override { return cfg_.slot_ratio; }
  bool wants_to_transmit(Slot t) override { return tdma_decide(cfg_, t); }

 private:
  TdmaConfig cfg_;
};

class AlohaNode final : public LegacyNode {
 public:
  AlohaNode(AlohaConfig cfg, Rng rng);
  std::string_view kind() const override;
  int packet_length() const override { return cfg_.slot_ratio; }
  bool wants_to_transmit(Slot t) override;
  void on_feedback(Slot t, Observation fb) override;

  const BackoffState& backoff() const { return backoff_; }

 private:
  AlohaConfig cfg_;
  Rng rng_;
  BackoffState backoff_;
};

class WifiNode final : public LegacyNode {
 public:
  WifiNode(WifiConfig cfg, Rng rng);
  std::string_view kind() const override { return "wifi"; }
  int packet_length() const override { return cfg_.packet_length; }
  bool wants_to_transmit(Slot t) override;
  void on_feedback(Slot t, Observation fb) override;

  const BackoffState& backoff() const { return backoff_; }

 private:
  WifiConfig cfg_;
  Rng rng_;
  BackoffState backoff_;
  bool transmitting_ = false;
};

std::unique_ptr<LegacyNode> make_legacy_node(const LegacyConfig& cfg, Rng rng);

}  // namespace csdlma
