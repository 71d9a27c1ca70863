#pragma once

#include "csdlma/agent.hpp"
#include "csdlma/env.hpp"
#include "csdlma/metrics.hpp"
#include "csdlma/protocols.hpp"
#include "csdlma/trainer.hpp"

#include <memory>
#include <string>
#include <vector>

namespace csdlma {

/// Decision maker for a node with one-basic-slot packets that chooses
/// TRANSMIT or SENSE in every slot.
class SlotController {
 public:
  virtual ~SlotController() = default;

  virtual Action decide(Slot t) = 0;

  /// Called after the slot resolves with the node's own feedback and the
  /// sum reward broadcast by the access point.
  virtual void learn(Slot t, Action action, Observation feedback, double reward) = 0;
};

/// The learning node: epsilon-greedy on the online network, stores each
/// abbreviated experience, then trains once per slot after warm-up.
class DlmaController final : public SlotController {
 public:
  DlmaController(TrainerConfig trainer_cfg, EpsilonSchedule schedule, std::uint64_t seed);

  Action decide(Slot t) override;
  void learn(Slot t, Action action, Observation feedback, double reward) override;

  const CsDlmaAgent& agent() const { return agent_; }
  const Trainer& trainer() const { return trainer_; }
  const std::vector<double>& losses() const { return losses_; }

 private:
  Trainer trainer_;
  CsDlmaAgent agent_;
  Eigen::MatrixXd input_;
  std::vector<double> losses_;
};

struct Participant {
  std::string name;
  std::unique_ptr<LegacyNode> legacy;          // exactly one of these two
  std::unique_ptr<SlotController> controller;  // is set
};

Participant make_legacy_participant(std::string name, std::unique_ptr<LegacyNode> node);
Participant make_controlled_participant(std::string name, std::unique_ptr<SlotController> c);

/// Synchronous execute-then-train loop over a shared channel.
class Simulation {
 public:
  explicit Simulation(std::vector<Participant> participants);

  /// Advances one basic slot and appends its rewards to the series.
  const StepResult& step();
  void run(Slot slots);

  Slot now() const { return env_.now(); }
  const ThroughputSeries& series() const { return series_; }
  const Participant& participant(std::size_t i) const { return participants_.at(i); }
  std::size_t size() const { return participants_.size(); }

 private:
  std::vector<Participant> participants_;
  Env env_;
  ThroughputSeries series_;
  std::vector<std::optional<Action>> decisions_;
  StepResult last_;
};

}  // namespace csdlma
