#include "csdlma/trainer.hpp"
#include "csdlma/agent.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace csdlma {

std::string_view to_string(DqnVariant v) {
  switch (v) {
    case DqnVariant::kOneStep: return "one_step";
    case DqnVariant::kNStep: return "n_step";
    case DqnVariant::kRewardBackprop: return "rb";
  }
  return "?";
}

DqnVariant parse_variant(std::string_view s) {
  if (s == "one_step") return DqnVariant::kOneStep;
  if (s == "n_step") return DqnVariant::kNStep;
  if (s == "rb" || s == "reward_backprop") return DqnVariant::kRewardBackprop;
  throw std::invalid_argument("unknown DQN variant '" + std::string(s) + "'");
}

void TrainerConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (minibatch < 1) throw std::invalid_argument("minibatch must be >= 1");
  if (target_sync < 1) throw std::invalid_argument("target_sync must be >= 1");
  if (variant == DqnVariant::kNStep && n_step < 1) throw std::invalid_argument("n must be >= 1");
  network.validate();
  if (buffer_capacity < window_length(network.history, horizon())) {
    throw std::invalid_argument("experience buffer smaller than one replay window");
  }
}

double one_step_target(double reward, std::span<const double> next_q, double gamma) {
  return reward + gamma * *std::max_element(next_q.begin(), next_q.end());
}

double n_step_target(std::span<const double> rewards, std::span<const double> next_q,
                     double gamma) {
  double ret = 0.0;
  double discount = 1.0;
  for (double r : rewards) {
    ret += discount * r;
    discount *= gamma;
  }
  return ret + discount * *std::max_element(next_q.begin(), next_q.end());
}

Trainer::Trainer(TrainerConfig cfg, std::uint64_t seed)
    : cfg_((cfg.validate(), cfg)),
      online_(cfg_.network, derive_seed(seed, "trainer/weights")),
      target_(online_.parameters()),
      optimizer_(online_.parameters().size(), cfg_.optimizer),
      buffer_(cfg_.buffer_capacity),
      sample_rng_(seed, "trainer/replay") {}

void Trainer::record(const AbbreviatedExperience& exp) {
  buffer_.store(exp);
  if (cfg_.variant == DqnVariant::kRewardBackprop) buffer_.backpropagate_reward(exp.reward);
}

std::size_t Trainer::warmup() const {
  return window_length(cfg_.network.history, cfg_.horizon()) +
         static_cast<std::size_t>(cfg_.minibatch);
}

void Trainer::sync_target() {
  target_.copy_from(online_);
  target_cache_.clear();
  ++syncs_;
}

std::optional<double> Trainer::train_step() {
  if (!ready()) return std::nullopt;
  const int history = cfg_.network.history;
  const int n = cfg_.horizon();
  const auto batch = static_cast<std::size_t>(cfg_.minibatch);
  const Eigen::Index input = cfg_.network.input_size();

  std::vector<ReplaySample> samples;
  samples.reserve(batch);
  for (std::size_t j = 0; j < batch; ++j) {
    samples.push_back(*sample_window(buffer_, history, n, sample_rng_));
  }

  // Evaluate theta- only on next states not seen since the last sync.
  std::vector<std::size_t> missing;
  for (std::size_t j = 0; j < batch; ++j) {
    const auto key = samples[j].next_state_key;
    if (!target_cache_.contains(key) &&
        std::none_of(missing.begin(), missing.end(),
                     [&](std::size_t m) { return samples[m].next_state_key == key; })) {
      missing.push_back(j);
    }
  }
  if (!missing.empty()) {
    Eigen::MatrixXd next(input, static_cast<Eigen::Index>(missing.size()));
    for (std::size_t c = 0; c < missing.size(); ++c) {
      encode_flat(samples[missing[c]].next_state, next.col(static_cast<Eigen::Index>(c)));
    }
    const Eigen::MatrixXd q = target_.forward(next);
    for (std::size_t c = 0; c < missing.size(); ++c) {
      target_cache_[samples[missing[c]].next_state_key] =
          q.col(static_cast<Eigen::Index>(c)).maxCoeff();
    }
  }

  Eigen::MatrixXd states(input, static_cast<Eigen::Index>(batch));
  std::vector<Action> actions(batch);
  std::vector<double> targets(batch);
  for (std::size_t j = 0; j < batch; ++j) {
    const ReplaySample& s = samples[j];
    encode_flat(s.state, states.col(static_cast<Eigen::Index>(j)));
    actions[j] = s.action;
    const double max_q = target_cache_.at(s.next_state_key);
    const double next_q[1] = {max_q};
    targets[j] = n == 1 ? one_step_target(s.rewards[0], next_q, cfg_.gamma)
                        : n_step_target(s.rewards, next_q, cfg_.gamma);
  }

  const double loss = online_.loss_and_gradient(states, actions, targets, gradient_);
  if (!std::isfinite(loss)) throw Fault("non-finite loss at update " + std::to_string(updates_));
  optimizer_.update(online_.parameters().values(), gradient_);
  ++updates_;
  if (updates_ % static_cast<std::uint64_t>(cfg_.target_sync) == 0) sync_target();
  return loss;
}

}  // namespace csdlma
