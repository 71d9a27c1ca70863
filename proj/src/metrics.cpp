#include "csdlma/metrics.hpp"

#include <cstdio>
#include <ostream>

namespace csdlma {

ThroughputSeries::ThroughputSeries(std::vector<std::string> node_names)
    : names_(std::move(node_names)),
      per_node_(names_.size()),
      node_prefix_(names_.size(), std::vector<double>{0.0}),
      sum_prefix_{0.0} {}

void ThroughputSeries::append(const std::vector<double>& node_rewards) {
  if (node_rewards.size() != names_.size()) {
    throw std::invalid_argument("ThroughputSeries::append: wrong number of nodes");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const double r = node_rewards[i];
    if (!(r >= 0.0)) throw std::invalid_argument("rewards must be non-negative");
    per_node_[i].push_back(r);
    node_prefix_[i].push_back(node_prefix_[i].back() + r);
    total += r;
  }
  sum_.push_back(total);
  sum_prefix_.push_back(sum_prefix_.back() + total);
}

std::optional<double> ThroughputSeries::short_term(std::size_t t, std::size_t window) const {
  if (window == 0 || t < window || t > slots()) return std::nullopt;
  return (sum_prefix_[t] - sum_prefix_[t - window]) / static_cast<double>(window);
}

std::optional<double> ThroughputSeries::node_short_term(std::size_t node, std::size_t t,
                                                        std::size_t window) const {
  if (window == 0 || t < window || t > slots()) return std::nullopt;
  const auto& p = node_prefix_.at(node);
  return (p[t] - p[t - window]) / static_cast<double>(window);
}

std::optional<double> ThroughputSeries::cumulative(std::size_t t) const {
  if (t == 0 || t > slots()) return std::nullopt;
  return sum_prefix_[t] / static_cast<double>(t);
}

std::optional<double> ThroughputSeries::node_cumulative(std::size_t node, std::size_t t) const {
  if (t == 0 || t > slots()) return std::nullopt;
  return node_prefix_.at(node)[t] / static_cast<double>(t);
}

ThroughputSeries ThroughputSeries::mean(const std::vector<ThroughputSeries>& runs) {
  if (runs.empty()) throw std::invalid_argument("mean of zero series");
  ThroughputSeries out(runs.front().names_);
  const std::size_t n = runs.front().slots();
  for (const auto& r : runs) {
    if (r.slots() != n || r.num_nodes() != out.num_nodes()) {
      throw std::invalid_argument("mean: series shapes differ");
    }
  }
  const double k = static_cast<double>(runs.size());
  std::vector<double> row(out.num_nodes());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      double acc = 0.0;
      for (const auto& r : runs) acc += r.per_node_[i][s];
      row[i] = acc / k;
    }
    out.append(row);
  }
  return out;
}

void ThroughputSeries::write_csv(std::ostream& out, std::size_t window) const {
  out << "slot";
  for (const auto& n : names_) out << ",reward_" << n;
  out << ",short_term_sum,cumulative_sum";
  for (const auto& n : names_) out << ",cumulative_" << n;
  out << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out << ',' << buf;
  };
  for (std::size_t s = 0; s < slots(); ++s) {
    out << s;
    for (std::size_t i = 0; i < names_.size(); ++i) put(per_node_[i][s]);
    if (auto st = short_term(s + 1, window)) {
      put(*st);
    } else {
      out << ',';
    }
    put(*cumulative(s + 1));
    for (std::size_t i = 0; i < names_.size(); ++i) put(*node_cumulative(i, s + 1));
    out << '\n';
  }
}

std::optional<std::size_t> slots_to_reach(const ThroughputSeries& series, double level,
                                          std::size_t window) {
  for (std::size_t t = window; t <= series.slots(); ++t) {
    if (*series.short_term(t, window) >= level) return t;
  }
  return std::nullopt;
}

double mean_short_term(const ThroughputSeries& series, std::size_t from, std::size_t to,
                       std::size_t window) {
  if (to <= from || to > series.slots() || from + 1 < window) {
    throw std::invalid_argument("mean_short_term: bad range");
  }
  double acc = 0.0;
  for (std::size_t t = from + 1; t <= to; ++t) acc += *series.short_term(t, window);
  return acc / static_cast<double>(to - from);
}

}  // namespace csdlma
