#include "csdlma/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace csdlma::oracle {

namespace {

// Joint legacy state: [phase, then per node: active, damaged, counter, stage].
using Joint = std::vector<int>;
constexpr std::size_t kFields = 4;

struct VectorHash {
  template <typename T>
  std::size_t operator()(const std::vector<T>& v) const {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (const auto& x : v) {
      h ^= std::hash<T>{}(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

struct Outcome {
  Joint next;
  double probability;
  Observation feedback;
  int reward;
};

class LegacyDynamics {
 public:
  explicit LegacyDynamics(std::span<const LegacyConfig> configs) {
    for (const auto& c : configs) {
      if (std::holds_alternative<WifiConfig>(c)) {
        throw std::invalid_argument("oracle does not model WiFi nodes");
      }
      std::visit([](const auto& cfg) { cfg.validate(); }, c);
      nodes_.push_back(c);
    }
    period_ = 1;
    for (const auto& c : nodes_) {
      const int p = std::holds_alternative<TdmaConfig>(c) ? std::get<TdmaConfig>(c).frame_length()
                                                          : std::get<AlohaConfig>(c).slot_ratio;
      period_ = std::lcm(period_, p);
    }
  }

  int period() const { return period_; }

  /// Slot 0: phase 0, q-ALOHA idle, window ALOHA counters uniform on [0, W-1].
  std::vector<std::pair<Joint, double>> initial() const {
    std::vector<std::pair<Joint, double>> out{{Joint(1 + kFields * nodes_.size(), 0), 1.0}};
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto* a = std::get_if<AlohaConfig>(&nodes_[i]);
      if (!a || a->variant == AlohaVariant::kQ) continue;
      out = expand(out, [&](const Joint& s, double p, auto emit) {
        for (int w = 0; w < a->window; ++w) {
          Joint n = s;
          n[field(i, 2)] = w;
          emit(n, p / a->window);
        }
      });
    }
    return out;
  }

  std::vector<Outcome> step(const Joint& state, Action genie) const {
    const int phase = state[0];
    std::vector<std::pair<Joint, double>> partial{{state, 1.0}};

    // Packet starts at slot boundaries.
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (const auto* t = std::get_if<TdmaConfig>(&nodes_[i])) {
        if (tdma_decide(*t, static_cast<Slot>(phase))) {
          for (auto& [s, p] : partial) start(s, i);
        }
        continue;
      }
      const auto& a = std::get<AlohaConfig>(nodes_[i]);
      if (phase % a.slot_ratio != 0) continue;
      if (a.variant == AlohaVariant::kQ) {
        partial = expand(partial, [&](const Joint& s, double p, auto emit) {
          if (a.q > 0.0) {
            Joint n = s;
            start(n, i);
            emit(n, p * a.q);
          }
          if (a.q < 1.0) emit(s, p * (1.0 - a.q));
        });
      } else {
        for (auto& [s, p] : partial) {
          if (s[field(i, 2)] == 0) {
            start(s, i);
          } else {
            --s[field(i, 2)];
          }
        }
      }
    }

    std::vector<Outcome> out;
    for (auto& [s, p] : partial) {
      int occupants = genie == Action::kTransmit ? 1 : 0;
      int legacy_busy = 0;
      for (std::size_t i = 0; i < nodes_.size(); ++i) legacy_busy += s[field(i, 0)];
      occupants += legacy_busy;
      if (occupants >= 2) {
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
          if (s[field(i, 0)]) s[field(i, 1)] = 1;
        }
      }
      Observation feedback;
      int reward = 0;
      if (genie == Action::kTransmit) {
        feedback = occupants == 1 ? Observation::kSuccessful : Observation::kCollided;
        if (occupants == 1) reward += 1;
      } else {
        feedback = legacy_busy > 0 ? Observation::kBusy : Observation::kIdle;
      }

      // Packet ends; window ALOHA redraws its counter.
      std::vector<std::pair<Joint, double>> ends{{s, p}};
      for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!s[field(i, 0)]) continue;
        const int len = packet_length(nodes_[i]);
        if (phase % len != len - 1) continue;
        const bool success = s[field(i, 1)] == 0;
        if (success) reward += len;
        const auto* a = std::get_if<AlohaConfig>(&nodes_[i]);
        const bool window = a && a->variant != AlohaVariant::kQ;
        ends = expand(ends, [&](const Joint& e, double q, auto emit) {
          Joint n = e;
          n[field(i, 0)] = 0;
          n[field(i, 1)] = 0;
          if (!window) {
            emit(n, q);
            return;
          }
          if (a->variant == AlohaVariant::kExponentialBackoff) {
            n[field(i, 3)] = success ? 0 : std::min(n[field(i, 3)] + 1, a->max_stage);
          }
          const int w = contention_window(a->window, n[field(i, 3)]);
          for (int c = 0; c < w; ++c) {
            Joint m = n;
            m[field(i, 2)] = c;
            emit(m, q / w);
          }
        });
      }
      for (auto& [e, q] : ends) {
        e[0] = (phase + 1) % period_;
        out.push_back({std::move(e), q, feedback, reward});
      }
    }
    return out;
  }

  std::string describe(const Joint& s) const {
    std::ostringstream os;
    os << "phase=" << s[0];
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      os << ' ' << kind_name(nodes_[i]) << i << "[a=" << s[field(i, 0)]
         << ",d=" << s[field(i, 1)];
      if (const auto* a = std::get_if<AlohaConfig>(&nodes_[i]); a && a->variant != AlohaVariant::kQ) {
        os << ",w=" << s[field(i, 2)];
        if (a->variant == AlohaVariant::kExponentialBackoff) os << ",s=" << s[field(i, 3)];
      }
      os << ']';
    }
    return os.str();
  }

 private:
  static std::size_t field(std::size_t node, std::size_t f) { return 1 + kFields * node + f; }

  static void start(Joint& s, std::size_t i) {
    s[field(i, 0)] = 1;
    s[field(i, 1)] = 0;
  }

  template <typename F>
  static std::vector<std::pair<Joint, double>> expand(
      const std::vector<std::pair<Joint, double>>& in, F&& f) {
    std::vector<std::pair<Joint, double>> out;
    for (const auto& [s, p] : in) {
      f(s, p, [&](Joint n, double q) { out.emplace_back(std::move(n), q); });
    }
    return out;
  }

  std::vector<LegacyConfig> nodes_;
  int period_ = 1;
};

// Belief: (legacy state id, probability), sorted by id.
using Belief = std::vector<std::pair<std::size_t, double>>;
using BeliefKey = std::vector<std::int64_t>;

BeliefKey key_of(const Belief& b) {
  BeliefKey k;
  k.reserve(2 * b.size());
  for (const auto& [id, p] : b) {
    k.push_back(static_cast<std::int64_t>(id));
    k.push_back(std::llround(p * 1e12));
  }
  return k;
}

}  // namespace

int observation_code(Observation feedback, int reward) {
  return static_cast<int>(feedback) * 4096 + reward;
}

StateCapExceeded::StateCapExceeded(std::size_t cap, std::size_t reached)
    : std::runtime_error("oracle state space exceeds cap of " + std::to_string(cap) +
                         " (reached " + std::to_string(reached) + " states)"),
      cap_(cap),
      reached_(reached) {}

std::size_t EnvModel::next_state(std::size_t state, Action a, int observation) const {
  for (const auto& b : transition(state, a).branches) {
    if (b.observation == observation) return b.next;
  }
  throw Fault("observation " + std::to_string(observation) + " impossible in oracle state " +
              std::to_string(state) + " (" + describe(state) + ")");
}

EnvModel build_model(std::span<const LegacyConfig> legacy, BuildOptions options) {
  const LegacyDynamics dyn(legacy);
  EnvModel model;
  model.period_ = dyn.period();

  std::unordered_map<Joint, std::size_t, VectorHash> joint_ids;
  std::vector<Joint> joints;
  auto joint_id = [&](const Joint& j) {
    auto [it, fresh] = joint_ids.try_emplace(j, joints.size());
    if (fresh) joints.push_back(j);
    return it->second;
  };

  std::unordered_map<BeliefKey, std::size_t, VectorHash> belief_ids;
  std::vector<Belief> beliefs;
  std::deque<std::size_t> frontier;
  auto belief_id = [&](Belief b) {
    std::sort(b.begin(), b.end());
    auto [it, fresh] = belief_ids.try_emplace(key_of(b), beliefs.size());
    if (fresh) {
      if (beliefs.size() >= options.max_states) {
        throw StateCapExceeded(options.max_states, beliefs.size() + 1);
      }
      beliefs.push_back(std::move(b));
      frontier.push_back(it->second);
    }
    return it->second;
  };

  {
    std::map<std::size_t, double> init;
    for (const auto& [j, p] : dyn.initial()) init[joint_id(j)] += p;
    belief_id(Belief(init.begin(), init.end()));
  }

  while (!frontier.empty()) {
    const std::size_t b = frontier.front();
    frontier.pop_front();
    if (model.transitions_.size() <= b) model.transitions_.resize(b + 1);
    for (int ai = 0; ai < kNumActions; ++ai) {
      const auto action = static_cast<Action>(ai);
      // observation -> (reward, next legacy state -> probability)
      std::map<int, std::pair<int, std::map<std::size_t, double>>> by_obs;
      const Belief current = beliefs[b];
      for (const auto& [jid, prior] : current) {
        for (auto& o : dyn.step(joints[jid], action)) {
          const int code = observation_code(o.feedback, o.reward);
          auto& slot = by_obs[code];
          slot.first = o.reward;
          slot.second[joint_id(o.next)] += prior * o.probability;
        }
      }
      Transition tr;
      for (auto& [code, entry] : by_obs) {
        double total = 0.0;
        for (const auto& [j, p] : entry.second) total += p;
        Belief next;
        for (const auto& [j, p] : entry.second) next.emplace_back(j, p / total);
        const std::size_t nid = belief_id(std::move(next));
        tr.branches.push_back({nid, total, code, static_cast<double>(entry.first)});
        tr.expected_reward += total * entry.first;
      }
      model.transitions_[b][static_cast<std::size_t>(ai)] = std::move(tr);
    }
  }
  model.transitions_.resize(beliefs.size());
  model.legacy_count_ = joints.size();

  model.descriptions_.reserve(beliefs.size());
  for (const auto& belief : beliefs) {
    std::ostringstream os;
    for (std::size_t k = 0; k < belief.size(); ++k) {
      if (k) os << " | ";
      if (belief.size() > 1) os << belief[k].second << ": ";
      os << dyn.describe(joints[belief[k].first]);
    }
    model.descriptions_.push_back(os.str());
  }
  return model;
}

namespace {

constexpr double kLazy = 0.5;

struct IterationResult {
  double gain;
  std::vector<double> bias;
  int iterations;
  double residual;
};

template <typename ActionSet>
IterationResult iterate(const EnvModel& model, ActionSet&& actions_of, double tol,
                        int max_iterations) {
  const std::size_t n = model.num_states();
  std::vector<double> h(n, 0.0), next(n, 0.0);
  for (int it = 1; it <= max_iterations; ++it) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (Action a : actions_of(s)) {
        const Transition& tr = model.transition(s, a);
        double v = tr.expected_reward;
        for (const auto& br : tr.branches) v += kLazy * br.probability * h[br.next];
        best = std::max(best, v);
      }
      next[s] = best + (1.0 - kLazy) * h[s];
      const double d = next[s] - h[s];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    const double ref = next[model.initial_state()];
    for (std::size_t s = 0; s < n; ++s) h[s] = next[s] - ref;
    if (hi - lo < tol) return {0.5 * (hi + lo), h, it, hi - lo};
  }
  throw Fault("relative value iteration did not converge in " + std::to_string(max_iterations) +
              " iterations");
}

}  // namespace

OracleSolution relative_value_iteration(const EnvModel& model, double tol, int max_iterations) {
  static constexpr std::array<Action, 2> kBoth = {Action::kTransmit, Action::kSense};
  auto r = iterate(model, [](std::size_t) { return kBoth; }, tol, max_iterations);
  OracleSolution sol;
  sol.gain = r.gain;
  sol.iterations = r.iterations;
  sol.residual = r.residual;
  sol.policy.resize(model.num_states());
  for (std::size_t s = 0; s < model.num_states(); ++s) {
    double value[kNumActions];
    for (int a = 0; a < kNumActions; ++a) {
      const Transition& tr = model.transition(s, static_cast<Action>(a));
      value[a] = tr.expected_reward;
      for (const auto& br : tr.branches) value[a] += kLazy * br.probability * r.bias[br.next];
    }
    // Waiting wins ties.
    sol.policy[s] = value[0] > value[1] + 1e-9 ? Action::kTransmit : Action::kSense;
  }
  sol.bias = std::move(r.bias);
  return sol;
}

double evaluate_policy(const EnvModel& model, std::span<const Action> policy, double tol,
                       int max_iterations) {
  if (policy.size() != model.num_states()) throw std::invalid_argument("policy size mismatch");
  return iterate(
             model, [&](std::size_t s) { return std::array<Action, 1>{policy[s]}; }, tol,
             max_iterations)
      .gain;
}

std::vector<Action> constant_policy(const EnvModel& model, Action a) {
  return std::vector<Action>(model.num_states(), a);
}

RolloutResult simulate_policy(const EnvModel& model, std::span<const Action> policy,
                              std::uint64_t slots, Rng& rng, int batches) {
  if (policy.size() != model.num_states()) throw std::invalid_argument("policy size mismatch");
  if (slots == 0 || batches < 2) throw std::invalid_argument("rollout needs slots and >= 2 batches");
  const std::uint64_t per_batch = slots / static_cast<std::uint64_t>(batches);
  if (per_batch == 0) throw std::invalid_argument("fewer slots than batches");
  std::size_t s = model.initial_state();
  std::vector<double> means;
  double total = 0.0;
  for (int b = 0; b < batches; ++b) {
    double acc = 0.0;
    for (std::uint64_t k = 0; k < per_batch; ++k) {
      const Transition& tr = model.transition(s, policy[s]);
      double u = rng.uniform();
      const Branch* chosen = &tr.branches.back();
      for (const auto& br : tr.branches) {
        if (u < br.probability) {
          chosen = &br;
          break;
        }
        u -= br.probability;
      }
      acc += chosen->reward;
      s = chosen->next;
    }
    means.push_back(acc / static_cast<double>(per_batch));
    total += acc;
  }
  const double used = static_cast<double>(per_batch) * batches;
  RolloutResult r;
  r.slots = per_batch * static_cast<std::uint64_t>(batches);
  r.mean = total / used;
  double var = 0.0;
  const double bm = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  for (double m : means) var += (m - bm) * (m - bm);
  var /= (batches - 1);
  r.standard_error = std::sqrt(var / batches);
  return r;
}

void write_policy_csv(const EnvModel& model, const OracleSolution& solution, std::ostream& out) {
  out << "state,action,belief\n";
  for (std::size_t s = 0; s < model.num_states(); ++s) {
    out << s << ',' << (solution.policy[s] == Action::kTransmit ? "TRANSMIT" : "WAIT") << ",\""
        << model.describe(s) << "\"\n";
  }
}

GenieController::GenieController(const EnvModel& model, std::vector<Action> policy)
    : model_(&model), policy_(std::move(policy)), state_(model.initial_state()) {
  if (policy_.size() != model.num_states()) throw std::invalid_argument("policy size mismatch");
}

Action GenieController::decide(Slot) { return policy_[state_]; }

void GenieController::learn(Slot, Action action, Observation feedback, double reward) {
  state_ = model_->next_state(state_, action,
                              observation_code(feedback, static_cast<int>(std::lround(reward))));
}

}  // namespace csdlma::oracle
