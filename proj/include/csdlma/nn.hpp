#pragma once

#include "csdlma/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace csdlma::nn {

enum class Architecture : std::uint8_t { kDense, kRecurrent };

std::string_view to_string(Architecture a);
Architecture parse_architecture(std::string_view s);

/// Dense: `hidden_layers` ReLU layers of `width` over the flattened 4M input.
/// Recurrent: one LSTM layer of `width` consumed over the M symbols, then
/// one ReLU layer of `width`. Both end in a linear layer with one output
/// per action.
struct NetworkShape {
  Architecture architecture = Architecture::kRecurrent;
  int history = 40;
  int width = 64;
  int hidden_layers = 2;

  int input_size() const { return kNumSymbols * history; }
  void validate() const;
  bool operator==(const NetworkShape&) const = default;
};

struct TensorInfo {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

/// All weights of one network in a single flat buffer, addressed through
/// named column-major tensors.
class Parameters {
 public:
  explicit Parameters(NetworkShape shape);

  const NetworkShape& shape() const { return shape_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  Eigen::Map<Eigen::MatrixXd> tensor(std::size_t i);
  Eigen::Map<const Eigen::MatrixXd> tensor(std::size_t i) const;

  bool operator==(const Parameters& other) const {
    return shape_ == other.shape_ && values_ == other.values_;
  }

 private:
  NetworkShape shape_;
  std::vector<TensorInfo> tensors_;
  // Aligned so that Eigen's vectorized paths over every tensor are the same
  // from one instance to the next; results are then bit-reproducible.
  std::vector<double, Eigen::aligned_allocator<double>> values_;
};

/// Seeded initialisation. Dense layers feeding a ReLU draw from
/// U(+-sqrt(6/fan_in)), the output layer from U(+-sqrt(3/fan_in)), LSTM
/// weights from U(+-1/sqrt(width)). Biases are zero except the LSTM forget
/// gate, which starts at 1.
void initialize(Parameters& params, std::uint64_t seed);

class QNetwork {
 public:
  QNetwork(NetworkShape shape, std::uint64_t seed);
  explicit QNetwork(Parameters params);

  const NetworkShape& shape() const { return params_.shape(); }
  const Parameters& parameters() const { return params_; }
  Parameters& parameters() { return params_; }

  /// inputs: 4M x B, one encoded state per column. Returns 2 x B.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;

  /// Mean over the batch of (target_j - Q(s_j, a_j))^2. Writes dLoss/dtheta
  /// into `gradient` (resized to the parameter count). Only the chosen
  /// action's output receives error.
  double loss_and_gradient(const Eigen::MatrixXd& inputs, std::span<const Action> actions,
                           std::span<const double> targets,
                           std::vector<double>& gradient) const;

  /// theta <- other.theta. Shapes must match.
  void copy_from(const QNetwork& other);

 private:
  void check_input(const Eigen::MatrixXd& inputs) const;

  Parameters params_;
};

struct RmsPropConfig {
  double learning_rate = 1e-3;
  double rho = 0.9;
  double epsilon = 1e-6;
};

/// acc <- rho*acc + (1-rho)*g^2 ;  theta <- theta - lr*g/sqrt(acc + eps)
class RmsProp {
 public:
  RmsProp(std::size_t size, RmsPropConfig cfg);

  void update(std::span<double> params, std::span<const double> gradient);

  std::span<const double> accumulator() const { return accumulator_; }
  const RmsPropConfig& config() const { return cfg_; }

 private:
  RmsPropConfig cfg_;
  std::vector<double, Eigen::aligned_allocator<double>> accumulator_;
};

/// Versioned text checkpoint. Values are written as hex floats so a load
/// reproduces every bit.
void save_parameters(const Parameters& params, std::ostream& out);
Parameters load_parameters(std::istream& in);

}  // namespace csdlma::nn
