#pragma once

#include "csdlma/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace csdlma {

using NodeId = int;

struct TransmissionAttempt {
  NodeId node_id = 0;
  Slot start_slot = 0;
  int length = 1;  // basic slots

  Slot last_slot() const { return start_slot + static_cast<Slot>(length) - 1; }
};

enum class SlotKind : std::uint8_t { kIdle, kSuccess, kCollision };

struct SlotOutcome {
  SlotKind kind = SlotKind::kIdle;
  std::vector<NodeId> busy_nodes;  // ascending
};

/// Classifies one basic slot from the packets occupying it.
SlotOutcome resolve_slot(std::span<const TransmissionAttempt> in_flight);

/// Reward issued at the end of a slot. `completing` is a packet whose final
/// basic slot is this one and whose whole span was collision free.
double reward_for_slot(const SlotOutcome& outcome,
                       const std::optional<TransmissionAttempt>& completing);

struct StepResult {
  Slot slot = 0;
  SlotOutcome outcome;
  std::vector<Observation> feedback;  // per node
  std::vector<double> node_rewards;   // per node, credited at packet end
  double reward = 0.0;                // sum over nodes
};

/// Shared channel. Nodes are identified by their index; each has a fixed
/// packet length in basic slots. A decision is supplied only for nodes that
/// are not mid-packet; in-flight packets continue on their own.
class Env {
 public:
  explicit Env(std::vector<int> packet_lengths);

  std::size_t num_nodes() const { return lengths_.size(); }
  Slot now() const { return now_; }
  int packet_length(NodeId id) const { return lengths_.at(static_cast<std::size_t>(id)); }

  /// True if the node has a packet that still occupies slot now().
  bool in_flight(NodeId id) const;

  /// decisions[i] must be empty for nodes in flight and set otherwise.
  StepResult step(std::span<const std::optional<Action>> decisions);

 private:
  struct Packet {
    TransmissionAttempt attempt;
    bool damaged = false;
  };

  std::vector<int> lengths_;
  std::vector<std::optional<Packet>> packets_;
  Slot now_ = 0;
};

}  // namespace csdlma
