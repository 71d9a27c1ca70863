#pragma once

#include "csdlma/nn.hpp"
#include "csdlma/replay.hpp"
#include "csdlma/rng.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace csdlma {

enum class DqnVariant : std::uint8_t { kOneStep, kNStep, kRewardBackprop };

std::string_view to_string(DqnVariant v);
DqnVariant parse_variant(std::string_view s);

struct TrainerConfig {
  DqnVariant variant = DqnVariant::kRewardBackprop;
  int n_step = 4;  // used by kNStep only
  double gamma = 0.9;
  int minibatch = 32;
  int target_sync = 200;
  std::size_t buffer_capacity = 500;
  nn::NetworkShape network;
  nn::RmsPropConfig optimizer;

  /// Number of rewards per reconstructed experience (1 unless n-step).
  int horizon() const { return variant == DqnVariant::kNStep ? n_step : 1; }
  void validate() const;
};

/// r + gamma * max_a' Q(s_next, a'; theta-)
double one_step_target(double reward, std::span<const double> next_q, double gamma);

/// sum_k gamma^k r_{k+1} + gamma^n * max_a' Q(s_{i+n}, a'; theta-)
double n_step_target(std::span<const double> rewards, std::span<const double> next_q,
                     double gamma);

/// Owns the online and target networks, the optimizer, and the experience
/// buffer. One call to train_step is one minibatch update.
class Trainer {
 public:
  Trainer(TrainerConfig cfg, std::uint64_t seed);

  const TrainerConfig& config() const { return cfg_; }
  const nn::QNetwork& online() const { return online_; }
  const nn::QNetwork& target() const { return target_; }
  const ExperienceBuffer& buffer() const { return buffer_; }

  /// Stores the experience and, for RB-DQN, rewrites trailing rewards.
  void record(const AbbreviatedExperience& exp);

  /// Buffer fill needed before the first update: M + n - 1 + N_E.
  std::size_t warmup() const;
  bool ready() const { return buffer_.size() >= warmup(); }

  /// Samples N_E windows, computes targets with theta-, takes one RMSProp
  /// step on the mean squared TD error, syncs theta- every `target_sync`
  /// updates. Returns the loss, or nothing while warming up.
  std::optional<double> train_step();

  std::uint64_t updates() const { return updates_; }
  std::uint64_t syncs() const { return syncs_; }

  /// theta- <- theta.
  void sync_target();

 private:
  TrainerConfig cfg_;
  nn::QNetwork online_;
  nn::QNetwork target_;
  nn::RmsProp optimizer_;
  ExperienceBuffer buffer_;
  Rng sample_rng_;
  std::uint64_t updates_ = 0;
  std::uint64_t syncs_ = 0;
  std::vector<double> gradient_;
  // max_a Q(s, a; theta-) keyed by ReplaySample::next_state_key. Valid until
  // the next sync because stored symbols never change.
  std::unordered_map<std::uint64_t, double> target_cache_;
};

}  // namespace csdlma
