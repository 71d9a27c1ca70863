#include "csdlma/env.hpp"

#include <algorithm>
#include <string>

namespace csdlma {

SlotOutcome resolve_slot(std::span<const TransmissionAttempt> in_flight) {
  SlotOutcome out;
  out.busy_nodes.reserve(in_flight.size());
  for (const auto& a : in_flight) out.busy_nodes.push_back(a.node_id);
  std::sort(out.busy_nodes.begin(), out.busy_nodes.end());
  if (out.busy_nodes.empty()) {
    out.kind = SlotKind::kIdle;
  } else if (out.busy_nodes.size() == 1) {
    out.kind = SlotKind::kSuccess;
  } else {
    out.kind = SlotKind::kCollision;
  }
  return out;
}

double reward_for_slot(const SlotOutcome& outcome,
                       const std::optional<TransmissionAttempt>& completing) {
  if (outcome.kind != SlotKind::kSuccess || !completing) return 0.0;
  return static_cast<double>(completing->length);
}

Env::Env(std::vector<int> packet_lengths)
    : lengths_(std::move(packet_lengths)), packets_(lengths_.size()) {
  for (int len : lengths_) {
    if (len < 1) throw std::invalid_argument("Env: packet length must be >= 1");
  }
}

bool Env::in_flight(NodeId id) const {
  return packets_.at(static_cast<std::size_t>(id)).has_value();
}

StepResult Env::step(std::span<const std::optional<Action>> decisions) {
  const std::size_t n = lengths_.size();
  if (decisions.size() != n) {
    throw std::invalid_argument("Env::step: expected one decision per node");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (packets_[i] && decisions[i]) {
      throw std::invalid_argument("Env::step: node " + std::to_string(i) +
                                  " is mid-packet and cannot take a decision");
    }
    if (!packets_[i] && !decisions[i]) {
      throw std::invalid_argument("Env::step: node " + std::to_string(i) +
                                  " is free and needs a decision");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (decisions[i] == Action::kTransmit) {
      packets_[i] = Packet{{static_cast<NodeId>(i), now_, lengths_[i]}, false};
    }
  }

  std::vector<TransmissionAttempt> occupying;
  for (const auto& p : packets_) {
    if (p) occupying.push_back(p->attempt);
  }

  StepResult result;
  result.slot = now_;
  result.outcome = resolve_slot(occupying);
  result.feedback.assign(n, Observation::kIdle);
  result.node_rewards.assign(n, 0.0);

  if (result.outcome.kind == SlotKind::kCollision) {
    for (auto& p : packets_) {
      if (p) p->damaged = true;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto& p = packets_[i];
    if (!p) {
      result.feedback[i] =
          result.outcome.busy_nodes.empty() ? Observation::kIdle : Observation::kBusy;
      continue;
    }
    if (p->attempt.last_slot() != now_) {
      result.feedback[i] = Observation::kBusy;
      continue;
    }
    if (p->damaged) {
      result.feedback[i] = Observation::kCollided;
    } else {
      result.feedback[i] = Observation::kSuccessful;
      // A clean completion implies this slot had a single occupant.
      result.node_rewards[i] = reward_for_slot(result.outcome, p->attempt);
      result.reward += result.node_rewards[i];
    }
    p.reset();
  }

  ++now_;
  return result;
}

}  // namespace csdlma
