#pragma once

// Reference implementations for checking the networks: a scalar-loop
// forward pass and a central finite-difference gradient.

#include "csdlma/nn.hpp"
#include "csdlma/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace csdlma::testing {

using Vec = std::vector<double>;

// y = W x + b with W stored column-major (rows x cols).
inline Vec affine(const nn::Parameters& p, std::size_t w, std::size_t b, const Vec& x) {
  const auto& t = p.tensors()[w];
  const auto vals = p.values();
  Vec y(static_cast<std::size_t>(t.rows));
  for (Eigen::Index r = 0; r < t.rows; ++r) {
    double acc = vals[p.tensors()[b].offset + static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < t.cols; ++c) {
      acc += vals[t.offset + static_cast<std::size_t>(c * t.rows + r)] * x[static_cast<std::size_t>(c)];
    }
    y[static_cast<std::size_t>(r)] = acc;
  }
  return y;
}

inline Vec relu(Vec v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
  return v;
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Q values for one encoded state of length 4M.
inline Vec naive_forward(const nn::Parameters& p, const Vec& input) {
  const nn::NetworkShape& s = p.shape();
  if (s.architecture == nn::Architecture::kDense) {
    Vec a = input;
    std::size_t l = 0;
    for (; l < static_cast<std::size_t>(s.hidden_layers); ++l) a = relu(affine(p, 2 * l, 2 * l + 1, a));
    return affine(p, 2 * l, 2 * l + 1, a);
  }
  const auto h = static_cast<std::size_t>(s.width);
  const auto& wx = p.tensors()[0];
  const auto& wh = p.tensors()[1];
  const auto& b = p.tensors()[2];
  const auto vals = p.values();
  Vec hidden(h, 0.0), cell(h, 0.0);
  for (int k = 0; k < s.history; ++k) {
    Vec z(4 * h);
    for (std::size_t r = 0; r < 4 * h; ++r) {
      double acc = vals[b.offset + r];
      for (std::size_t c = 0; c < 4; ++c) {
        acc += vals[wx.offset + c * 4 * h + r] * input[4 * static_cast<std::size_t>(k) + c];
      }
      for (std::size_t c = 0; c < h; ++c) acc += vals[wh.offset + c * 4 * h + r] * hidden[c];
      z[r] = acc;
    }
    for (std::size_t j = 0; j < h; ++j) {
      const double in = logistic(z[j]);
      const double forget = logistic(z[h + j]);
      const double cand = std::tanh(z[2 * h + j]);
      const double out = logistic(z[3 * h + j]);
      cell[j] = forget * cell[j] + in * cand;
      hidden[j] = out * std::tanh(cell[j]);
    }
  }
  Vec a = relu(affine(p, 3, 4, hidden));
  return affine(p, 5, 6, a);
}

// Random one-hot histories, one per column.
inline Eigen::MatrixXd random_states(int history, int batch, Rng& rng) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4 * history, batch);
  for (int j = 0; j < batch; ++j) {
    for (int k = 0; k < history; ++k) x(4 * k + static_cast<int>(rng.below(4)), j) = 1.0;
  }
  return x;
}

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor); the floor keeps entries
// that are zero up to rounding from dominating.
inline GradientCheck check_gradient(nn::QNetwork& net, const Eigen::MatrixXd& inputs,
                                    const std::vector<Action>& actions, const Vec& targets,
                                    double delta = 1e-5, double floor = 1e-6) {
  Vec analytic, scratch;
  net.loss_and_gradient(inputs, actions, targets, analytic);
  auto values = net.parameters().values();
  GradientCheck out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + delta;
    const double up = net.loss_and_gradient(inputs, actions, targets, scratch);
    values[i] = saved - delta;
    const double down = net.loss_and_gradient(inputs, actions, targets, scratch);
    values[i] = saved;
    const double numeric = (up - down) / (2.0 * delta);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    const double rel = std::abs(analytic[i] - numeric) / scale;
    if (rel > out.max_relative_error) {
      out.max_relative_error = rel;
      out.worst_index = i;
    }
  }
  return out;
}

// A random small network, its inputs, actions and targets.
struct GradientCase {
  nn::QNetwork net;
  Eigen::MatrixXd inputs;
  std::vector<Action> actions;
  Vec targets;
};

inline GradientCase random_gradient_case(nn::Architecture arch, std::uint64_t seed) {
  Rng rng(seed);
  nn::NetworkShape shape;
  shape.architecture = arch;
  shape.history = 1 + static_cast<int>(rng.below(10));
  shape.width = 1 + static_cast<int>(rng.below(64));
  shape.hidden_layers = 1 + static_cast<int>(rng.below(3));
  nn::QNetwork net(shape, rng.next());
  // Perturb biases too so no tensor sits at a special point.
  for (double& v : net.parameters().values()) v += 0.1 * (2.0 * rng.uniform() - 1.0);
  const int batch = 1 + static_cast<int>(rng.below(6));
  Eigen::MatrixXd inputs = random_states(shape.history, batch, rng);
  std::vector<Action> actions;
  Vec targets;
  for (int j = 0; j < batch; ++j) {
    actions.push_back(rng.bernoulli(0.5) ? Action::kTransmit : Action::kSense);
    targets.push_back(4.0 * rng.uniform() - 1.0);
  }
  return {std::move(net), std::move(inputs), std::move(actions), std::move(targets)};
}

}  // namespace csdlma::testing
