#pragma once

#include "csdlma/rng.hpp"
#include "csdlma/types.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace csdlma {

/// Pairs an action with the feedback it produced. TRANSMIT must come with
/// SUCCESSFUL/COLLIDED and SENSE with BUSY/IDLE; anything else is a Fault.
ChannelSymbol make_symbol(Action action, Observation feedback);

Action symbol_action(ChannelSymbol s);

/// Multiplicative decay per basic slot, clamped below at `floor`.
class EpsilonSchedule {
 public:
  EpsilonSchedule(double initial = 0.1, double decay = 0.995, double floor = 0.005);

  double value() const { return value_; }
  void advance();

 private:
  double value_;
  double decay_;
  double floor_;
};

/// The last M channel symbols, oldest first. Starts filled with
/// (SENSE, IDLE) so the network input has a fixed shape from slot 0.
class ChannelHistory {
 public:
  explicit ChannelHistory(int length);

  int length() const { return static_cast<int>(symbols_.size()); }
  std::span<const ChannelSymbol> symbols() const { return symbols_; }
  ChannelSymbol latest() const { return symbols_.back(); }
  void push(ChannelSymbol s);

 private:
  std::vector<ChannelSymbol> symbols_;
};

/// M x 4 one-hot rows.
Eigen::MatrixXd encode_state(std::span<const ChannelSymbol> history);

/// Writes the flattened encoding (length 4M, symbol i at rows 4i..4i+3)
/// into `out`, which must already have that length.
void encode_flat(std::span<const ChannelSymbol> history, Eigen::Ref<Eigen::VectorXd> out);

/// Epsilon-greedy over (Q(TRANSMIT), Q(SENSE)). Ties go to TRANSMIT.
/// Advances the schedule after choosing.
Action select_action(std::span<const double> q_values, EpsilonSchedule& schedule, Rng& rng);

class CsDlmaAgent {
 public:
  CsDlmaAgent(int history_length, EpsilonSchedule schedule, Rng rng);

  const ChannelHistory& history() const { return history_; }
  const EpsilonSchedule& schedule() const { return schedule_; }

  Action act(std::span<const double> q_values) {
    return select_action(q_values, schedule_, rng_);
  }

  /// Appends (action, feedback) to the history and returns the new symbol.
  ChannelSymbol observe(Action action, Observation feedback);

 private:
  ChannelHistory history_;
  EpsilonSchedule schedule_;
  Rng rng_;
};

}  // namespace csdlma
