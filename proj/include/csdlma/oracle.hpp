#pragma once

#include "csdlma/protocols.hpp"
#include "csdlma/rng.hpp"
#include "csdlma/simulation.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace csdlma::oracle {

/// The model-aware node ("genie") sends one-basic-slot packets. It knows every
/// legacy node's mechanism and parameters but not their random draws; it
/// learns them only through its own feedback and the access point's reward
/// broadcast. Its information states are beliefs over the legacy joint
/// state, and because every draw is revealed within a bounded time the
/// reachable beliefs form a finite MDP.

/// Observation code: feedback and sum reward of one slot.
int observation_code(Observation feedback, int reward);

struct Branch {
  std::size_t next = 0;
  double probability = 0.0;
  int observation = 0;
  double reward = 0.0;
};

struct Transition {
  std::vector<Branch> branches;
  double expected_reward = 0.0;
};

class StateCapExceeded : public std::runtime_error {
 public:
  StateCapExceeded(std::size_t cap, std::size_t reached);
  std::size_t cap() const { return cap_; }
  std::size_t reached() const { return reached_; }

 private:
  std::size_t cap_;
  std::size_t reached_;
};

struct BuildOptions {
  std::size_t max_states = 1'000'000;
};

class EnvModel {
 public:
  std::size_t num_states() const { return transitions_.size(); }
  std::size_t initial_state() const { return 0; }
  /// Period of the global slot phase (lcm of TDMA frames and ALOHA slots).
  int phase_period() const { return period_; }
  std::size_t num_legacy_states() const { return legacy_count_; }

  const Transition& transition(std::size_t state, Action a) const {
    return transitions_[state][static_cast<std::size_t>(a)];
  }

  /// Belief reached from `state` after taking `a` and seeing `observation`.
  /// Throws Fault if that observation has probability zero.
  std::size_t next_state(std::size_t state, Action a, int observation) const;

  const std::string& describe(std::size_t state) const { return descriptions_.at(state); }

 private:
  friend EnvModel build_model(std::span<const LegacyConfig>, BuildOptions);

  int period_ = 1;
  std::size_t legacy_count_ = 0;
  std::vector<std::array<Transition, kNumActions>> transitions_;
  std::vector<std::string> descriptions_;
};

/// Enumerates the reachable belief MDP. WiFi nodes are not supported.
EnvModel build_model(std::span<const LegacyConfig> legacy, BuildOptions options = {});

struct OracleSolution {
  double gain = 0.0;
  std::vector<double> bias;
  std::vector<Action> policy;
  int iterations = 0;
  double residual = 0.0;
};

/// Average-reward relative value iteration on the aperiodic transform
/// P' = (P + I)/2, stopped when the span of the update falls below `tol`.
OracleSolution relative_value_iteration(const EnvModel& model, double tol = 1e-9,
                                        int max_iterations = 5'000'000);

/// Exact gain of a fixed stationary policy (same iteration, one action).
double evaluate_policy(const EnvModel& model, std::span<const Action> policy, double tol = 1e-9,
                       int max_iterations = 5'000'000);

std::vector<Action> constant_policy(const EnvModel& model, Action a);

struct RolloutResult {
  double mean = 0.0;
  double standard_error = 0.0;  // batch means
  std::uint64_t slots = 0;
};

RolloutResult simulate_policy(const EnvModel& model, std::span<const Action> policy,
                              std::uint64_t slots, Rng& rng, int batches = 100);

/// Policy table: state,action,description.
void write_policy_csv(const EnvModel& model, const OracleSolution& solution, std::ostream& out);

/// Runs the genie's policy inside the real simulator, tracking its belief
/// from the feedback it receives.
class GenieController final : public SlotController {
 public:
  GenieController(const EnvModel& model, std::vector<Action> policy);

  Action decide(Slot t) override;
  void learn(Slot t, Action action, Observation feedback, double reward) override;

  std::size_t state() const { return state_; }

 private:
  const EnvModel* model_;
  std::vector<Action> policy_;
  std::size_t state_;
};

}  // namespace csdlma::oracle
