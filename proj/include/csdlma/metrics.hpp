#pragma once

#include "csdlma/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace csdlma {

/// Per-node reward streams indexed by the basic slot in which the reward
/// was earned, plus their sum.
class ThroughputSeries {
 public:
  explicit ThroughputSeries(std::vector<std::string> node_names);

  std::size_t num_nodes() const { return names_.size(); }
  const std::vector<std::string>& node_names() const { return names_; }
  std::size_t slots() const { return sum_.size(); }

  void append(const std::vector<double>& node_rewards);

  double node_reward(std::size_t node, std::size_t slot) const { return per_node_[node][slot]; }
  double sum_reward(std::size_t slot) const { return sum_[slot]; }
  const std::vector<double>& sum_stream() const { return sum_; }
  const std::vector<double>& node_stream(std::size_t node) const { return per_node_[node]; }

  /// Sum throughput over the last `window` slots before t, i.e. slots
  /// t-window .. t-1. Absent when t < window or t > slots().
  std::optional<double> short_term(std::size_t t, std::size_t window = 1000) const;
  std::optional<double> node_short_term(std::size_t node, std::size_t t,
                                        std::size_t window = 1000) const;

  /// Sum throughput over slots 0 .. t-1. Absent when t = 0.
  std::optional<double> cumulative(std::size_t t) const;
  std::optional<double> node_cumulative(std::size_t node, std::size_t t) const;

  /// Elementwise mean of equally shaped series.
  static ThroughputSeries mean(const std::vector<ThroughputSeries>& runs);

  /// Columns: slot, reward_<node>..., short_term_sum, cumulative_sum,
  /// cumulative_<node>.... Row s covers slots 0..s.
  void write_csv(std::ostream& out, std::size_t window = 1000) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<double>> per_node_;
  std::vector<double> sum_;
  // Prefix sums (length slots()+1) so windowed queries are O(1).
  std::vector<std::vector<double>> node_prefix_;
  std::vector<double> sum_prefix_;
};

/// First t >= window at which short_term(t) reaches `level`, if any.
std::optional<std::size_t> slots_to_reach(const ThroughputSeries& series, double level,
                                          std::size_t window = 1000);

/// Mean of short_term(t) for t in (from, to].
double mean_short_term(const ThroughputSeries& series, std::size_t from, std::size_t to,
                       std::size_t window = 1000);

}  // namespace csdlma
