#include "csdlma/agent.hpp"

#include <cmath>
#include <string>

namespace csdlma {

ChannelSymbol make_symbol(Action action, Observation feedback) {
  if (action == Action::kTransmit) {
    if (feedback == Observation::kSuccessful) return ChannelSymbol::kTransmitSuccessful;
    if (feedback == Observation::kCollided) return ChannelSymbol::kTransmitCollided;
  } else {
    if (feedback == Observation::kBusy) return ChannelSymbol::kSenseBusy;
    if (feedback == Observation::kIdle) return ChannelSymbol::kSenseIdle;
  }
  throw Fault("feedback " + std::string(to_string(feedback)) + " cannot follow action " +
              std::string(to_string(action)));
}

Action symbol_action(ChannelSymbol s) {
  return (s == ChannelSymbol::kTransmitSuccessful || s == ChannelSymbol::kTransmitCollided)
             ? Action::kTransmit
             : Action::kSense;
}

EpsilonSchedule::EpsilonSchedule(double initial, double decay, double floor)
    : value_(initial), decay_(decay), floor_(floor) {
  if (!(floor >= 0.0 && floor <= initial && initial <= 1.0)) {
    throw std::invalid_argument("epsilon schedule needs 0 <= floor <= initial <= 1");
  }
  if (!(decay > 0.0 && decay <= 1.0)) {
    throw std::invalid_argument("epsilon decay must lie in (0, 1]");
  }
}

void EpsilonSchedule::advance() { value_ = std::max(floor_, value_ * decay_); }

ChannelHistory::ChannelHistory(int length) {
  if (length < 1) throw std::invalid_argument("history length must be >= 1");
  symbols_.assign(static_cast<std::size_t>(length), ChannelSymbol::kSenseIdle);
}

void ChannelHistory::push(ChannelSymbol s) {
  symbols_.erase(symbols_.begin());
  symbols_.push_back(s);
}

Eigen::MatrixXd encode_state(std::span<const ChannelSymbol> history) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(history.size()), kNumSymbols);
  for (std::size_t i = 0; i < history.size(); ++i) {
    out(static_cast<Eigen::Index>(i), static_cast<int>(history[i])) = 1.0;
  }
  return out;
}

void encode_flat(std::span<const ChannelSymbol> history, Eigen::Ref<Eigen::VectorXd> out) {
  out.setZero();
  for (std::size_t i = 0; i < history.size(); ++i) {
    out(static_cast<Eigen::Index>(kNumSymbols * i) + static_cast<int>(history[i])) = 1.0;
  }
}

Action select_action(std::span<const double> q_values, EpsilonSchedule& schedule, Rng& rng) {
  if (q_values.size() != kNumActions) throw std::invalid_argument("expected two Q values");
  for (double q : q_values) {
    if (!std::isfinite(q)) throw Fault("non-finite Q value; training has diverged");
  }
  Action chosen;
  if (rng.uniform() < schedule.value()) {
    chosen = rng.below(2) == 0 ? Action::kTransmit : Action::kSense;
  } else {
    chosen = q_values[1] > q_values[0] ? Action::kSense : Action::kTransmit;
  }
  schedule.advance();
  return chosen;
}

CsDlmaAgent::CsDlmaAgent(int history_length, EpsilonSchedule schedule, Rng rng)
    : history_(history_length), schedule_(schedule), rng_(rng) {}

ChannelSymbol CsDlmaAgent::observe(Action action, Observation feedback) {
  const ChannelSymbol s = make_symbol(action, feedback);
  history_.push(s);
  return s;
}

}  // namespace csdlma
