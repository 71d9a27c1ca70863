#include "csdlma/simulation.hpp"

namespace csdlma {

namespace {

std::vector<int> lengths_of(const std::vector<Participant>& ps) {
  std::vector<int> out;
  out.reserve(ps.size());
  for (const auto& p : ps) {
    if (static_cast<bool>(p.legacy) == static_cast<bool>(p.controller)) {
      throw std::invalid_argument("participant '" + p.name +
                                  "' needs exactly one of a legacy node or a controller");
    }
    out.push_back(p.legacy ? p.legacy->packet_length() : 1);
  }
  return out;
}

std::vector<std::string> names_of(const std::vector<Participant>& ps) {
  std::vector<std::string> out;
  for (const auto& p : ps) out.push_back(p.name);
  return out;
}

}  // namespace

DlmaController::DlmaController(TrainerConfig trainer_cfg, EpsilonSchedule schedule,
                               std::uint64_t seed)
    : trainer_(trainer_cfg, seed),
      agent_(trainer_cfg.network.history, schedule, Rng(seed, "agent/explore")),
      input_(trainer_cfg.network.input_size(), 1) {}

Action DlmaController::decide(Slot) {
  encode_flat(agent_.history().symbols(), input_.col(0));
  const Eigen::MatrixXd q = trainer_.online().forward(input_);
  const double values[kNumActions] = {q(0, 0), q(1, 0)};
  return agent_.act(values);
}

void DlmaController::learn(Slot, Action action, Observation feedback, double reward) {
  const ChannelSymbol before = agent_.history().latest();
  const ChannelSymbol after = agent_.observe(action, feedback);
  trainer_.record({before, action, reward, after});
  if (auto loss = trainer_.train_step()) losses_.push_back(*loss);
}

Participant make_legacy_participant(std::string name, std::unique_ptr<LegacyNode> node) {
  return Participant{std::move(name), std::move(node), nullptr};
}

Participant make_controlled_participant(std::string name, std::unique_ptr<SlotController> c) {
  return Participant{std::move(name), nullptr, std::move(c)};
}

Simulation::Simulation(std::vector<Participant> participants)
    : participants_(std::move(participants)),
      env_(lengths_of(participants_)),
      series_(names_of(participants_)),
      decisions_(participants_.size()) {}

const StepResult& Simulation::step() {
  const Slot t = env_.now();
  for (std::size_t i = 0; i < participants_.size(); ++i) {
    auto& p = participants_[i];
    if (env_.in_flight(static_cast<NodeId>(i))) {
      decisions_[i].reset();
    } else if (p.legacy) {
      decisions_[i] = p.legacy->wants_to_transmit(t) ? Action::kTransmit : Action::kSense;
    } else {
      decisions_[i] = p.controller->decide(t);
    }
  }
  last_ = env_.step(decisions_);
  for (std::size_t i = 0; i < participants_.size(); ++i) {
    auto& p = participants_[i];
    if (p.legacy) {
      p.legacy->on_feedback(t, last_.feedback[i]);
    } else {
      p.controller->learn(t, *decisions_[i], last_.feedback[i], last_.reward);
    }
  }
  series_.append(last_.node_rewards);
  return last_;
}

void Simulation::run(Slot slots) {
  for (Slot k = 0; k < slots; ++k) step();
}

}  // namespace csdlma
