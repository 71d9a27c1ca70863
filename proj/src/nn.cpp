#include "csdlma/nn.hpp"
#include "csdlma/rng.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace csdlma::nn {

using Eigen::Index;
using Eigen::MatrixXd;

namespace {

// Tensor order for the recurrent network.
enum RecurrentTensor : std::size_t { kLstmWx, kLstmWh, kLstmB, kHiddenW, kHiddenB, kOutW, kOutB };

constexpr const char* kCheckpointMagic = "csdlma-parameters";
constexpr int kCheckpointVersion = 1;

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& z) {
  return (1.0 + (-z.array()).exp()).inverse();
}

// Eigen's double tanh is scalar; going through the vectorized exp is several times faster.
template <typename Derived>
auto tanh_of(const Eigen::MatrixBase<Derived>& z) {
  return 2.0 * (1.0 + (-2.0 * z.array()).exp()).inverse() - 1.0;
}

void require_finite(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw Fault(std::string("non-finite values in ") + what);
}

// Recurrent activations for all steps, step k occupying columns [k*B, (k+1)*B).
// cells and hiddens carry one extra leading zero block for the initial state.
struct LstmTrace {
  MatrixXd inputs;     // 4 x M*B
  MatrixXd gates;      // 4H x M*B after nonlinearity: i, f, g, o
  MatrixXd cells;      // H x (M+1)*B
  MatrixXd tanh_cells; // H x M*B
  MatrixXd hiddens;    // H x (M+1)*B
};

struct ForwardTrace {
  LstmTrace lstm;                        // recurrent only
  std::vector<MatrixXd> activations;     // inputs to each dense layer, last = input to output layer
  std::vector<MatrixXd> pre_activations; // ReLU layer pre-activations
  MatrixXd q;
};

ForwardTrace run_forward(const Parameters& p, const MatrixXd& inputs, bool keep) {
  const NetworkShape& shape = p.shape();
  const Index batch = inputs.cols();
  ForwardTrace trace;

  if (shape.architecture == Architecture::kRecurrent) {
    const Index h = shape.width;
    const Index m = shape.history;
    const auto wh = p.tensor(kLstmWh);
    LstmTrace& tr = trace.lstm;
    tr.inputs.resize(kNumSymbols, m * batch);
    for (Index k = 0; k < m; ++k) {
      tr.inputs.middleCols(k * batch, batch) = inputs.middleRows(kNumSymbols * k, kNumSymbols);
    }
    tr.gates.noalias() = p.tensor(kLstmWx) * tr.inputs;
    tr.gates.colwise() += p.tensor(kLstmB).col(0);
    tr.cells = MatrixXd::Zero(h, (m + 1) * batch);
    tr.tanh_cells.resize(h, m * batch);
    tr.hiddens = MatrixXd::Zero(h, (m + 1) * batch);
    for (Index k = 0; k < m; ++k) {
      auto z = tr.gates.middleCols(k * batch, batch);
      z.noalias() += wh * tr.hiddens.middleCols(k * batch, batch);
      z.topRows(2 * h) = sigmoid(z.topRows(2 * h)).matrix();
      z.middleRows(2 * h, h) = tanh_of(z.middleRows(2 * h, h)).matrix();
      z.bottomRows(h) = sigmoid(z.bottomRows(h)).matrix();
      auto cell = tr.cells.middleCols((k + 1) * batch, batch);
      cell = (z.middleRows(h, h).array() * tr.cells.middleCols(k * batch, batch).array() +
              z.topRows(h).array() * z.middleRows(2 * h, h).array())
                 .matrix();
      auto tanh_cell = tr.tanh_cells.middleCols(k * batch, batch);
      tanh_cell = tanh_of(cell).matrix();
      tr.hiddens.middleCols((k + 1) * batch, batch) =
          (z.bottomRows(h).array() * tanh_cell.array()).matrix();
    }
    MatrixXd hidden = tr.hiddens.rightCols(batch);
    MatrixXd pre = p.tensor(kHiddenW) * hidden;
    pre.colwise() += p.tensor(kHiddenB).col(0);
    MatrixXd act = pre.cwiseMax(0.0);
    trace.q = p.tensor(kOutW) * act;
    trace.q.colwise() += p.tensor(kOutB).col(0);
    if (keep) {
      trace.activations.push_back(std::move(hidden));
      trace.activations.push_back(std::move(act));
      trace.pre_activations.push_back(std::move(pre));
    }
  } else {
    const std::size_t layers = static_cast<std::size_t>(shape.hidden_layers);
    MatrixXd act = inputs;
    for (std::size_t l = 0; l < layers; ++l) {
      MatrixXd pre = p.tensor(2 * l) * act;
      pre.colwise() += p.tensor(2 * l + 1).col(0);
      MatrixXd next = pre.cwiseMax(0.0);
      if (keep) {
        trace.activations.push_back(std::move(act));
        trace.pre_activations.push_back(std::move(pre));
      }
      act = std::move(next);
    }
    trace.q = p.tensor(2 * layers) * act;
    trace.q.colwise() += p.tensor(2 * layers + 1).col(0);
    if (keep) trace.activations.push_back(std::move(act));
  }
  return trace;
}

}  // namespace

std::string_view to_string(Architecture a) {
  return a == Architecture::kDense ? "fnn" : "rnn";
}

Architecture parse_architecture(std::string_view s) {
  if (s == "fnn" || s == "dense") return Architecture::kDense;
  if (s == "rnn" || s == "lstm" || s == "recurrent") return Architecture::kRecurrent;
  throw std::invalid_argument("unknown architecture '" + std::string(s) + "'");
}

void NetworkShape::validate() const {
  if (history < 1) throw std::invalid_argument("network: history must be >= 1");
  if (width < 1) throw std::invalid_argument("network: width must be >= 1");
  if (architecture == Architecture::kDense && hidden_layers < 1) {
    throw std::invalid_argument("network: dense network needs at least one hidden layer");
  }
}

Parameters::Parameters(NetworkShape shape) : shape_(shape) {
  shape_.validate();
  std::size_t offset = 0;
  auto add = [&](std::string name, Index rows, Index cols) {
    tensors_.push_back({std::move(name), rows, cols, offset});
    offset += static_cast<std::size_t>(rows * cols);
  };
  const Index w = shape_.width;
  if (shape_.architecture == Architecture::kRecurrent) {
    add("lstm.wx", 4 * w, kNumSymbols);
    add("lstm.wh", 4 * w, w);
    add("lstm.b", 4 * w, 1);
    add("hidden.w", w, w);
    add("hidden.b", w, 1);
  } else {
    Index fan_in = shape_.input_size();
    for (int l = 0; l < shape_.hidden_layers; ++l) {
      add("dense" + std::to_string(l) + ".w", w, fan_in);
      add("dense" + std::to_string(l) + ".b", w, 1);
      fan_in = w;
    }
  }
  add("out.w", kNumActions, w);
  add("out.b", kNumActions, 1);
  values_.assign(offset, 0.0);
}

Eigen::Map<MatrixXd> Parameters::tensor(std::size_t i) {
  const TensorInfo& t = tensors_.at(i);
  return {values_.data() + t.offset, t.rows, t.cols};
}

Eigen::Map<const MatrixXd> Parameters::tensor(std::size_t i) const {
  const TensorInfo& t = tensors_.at(i);
  return {values_.data() + t.offset, t.rows, t.cols};
}

void initialize(Parameters& params, std::uint64_t seed) {
  Rng rng(seed, "nn/init");
  auto fill = [&](std::size_t i, double limit) {
    for (double& v : params.tensor(i).reshaped()) v = (2.0 * rng.uniform() - 1.0) * limit;
  };
  const auto& shape = params.shape();
  const std::size_t n = params.tensors().size();
  for (std::size_t i = 0; i < n; ++i) params.tensor(i).setZero();

  if (shape.architecture == Architecture::kRecurrent) {
    const double lstm_limit = 1.0 / std::sqrt(static_cast<double>(shape.width));
    fill(kLstmWx, lstm_limit);
    fill(kLstmWh, lstm_limit);
    params.tensor(kLstmB).middleRows(shape.width, shape.width).setOnes();
    fill(kHiddenW, std::sqrt(6.0 / shape.width));
  } else {
    double fan_in = shape.input_size();
    for (int l = 0; l < shape.hidden_layers; ++l) {
      fill(2 * static_cast<std::size_t>(l), std::sqrt(6.0 / fan_in));
      fan_in = shape.width;
    }
  }
  fill(n - 2, std::sqrt(3.0 / shape.width));
}

QNetwork::QNetwork(NetworkShape shape, std::uint64_t seed) : params_(shape) {
  initialize(params_, seed);
}

QNetwork::QNetwork(Parameters params) : params_(std::move(params)) {}

void QNetwork::check_input(const MatrixXd& inputs) const {
  if (inputs.rows() != shape().input_size()) {
    throw Fault("input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                std::to_string(shape().input_size()));
  }
}

MatrixXd QNetwork::forward(const MatrixXd& inputs) const {
  check_input(inputs);
  return run_forward(params_, inputs, false).q;
}

double QNetwork::loss_and_gradient(const MatrixXd& inputs, std::span<const Action> actions,
                                   std::span<const double> targets,
                                   std::vector<double>& gradient) const {
  check_input(inputs);
  const Index batch = inputs.cols();
  if (actions.size() != static_cast<std::size_t>(batch) || targets.size() != actions.size()) {
    throw std::invalid_argument("loss_and_gradient: batch size mismatch");
  }
  ForwardTrace trace = run_forward(params_, inputs, true);
  require_finite(trace.q, "network output");

  MatrixXd dq = MatrixXd::Zero(kNumActions, batch);
  double loss = 0.0;
  for (Index j = 0; j < batch; ++j) {
    const int a = static_cast<int>(actions[static_cast<std::size_t>(j)]);
    const double err = trace.q(a, j) - targets[static_cast<std::size_t>(j)];
    loss += err * err;
    dq(a, j) = 2.0 * err / static_cast<double>(batch);
  }
  loss /= static_cast<double>(batch);
  if (!std::isfinite(loss)) throw Fault("non-finite loss");

  // Accumulate in aligned storage; the caller's buffer may sit anywhere.
  Eigen::VectorXd flat = Eigen::VectorXd::Zero(static_cast<Index>(params_.size()));
  auto g = [&](std::size_t i) {
    const TensorInfo& t = params_.tensors()[i];
    return Eigen::Map<MatrixXd>(flat.data() + t.offset, t.rows, t.cols);
  };

  const std::size_t n = params_.tensors().size();
  const MatrixXd& last = trace.activations.back();
  g(n - 2).noalias() = dq * last.transpose();
  g(n - 1) = dq.rowwise().sum();
  MatrixXd d_act = params_.tensor(n - 2).transpose() * dq;

  if (shape().architecture == Architecture::kRecurrent) {
    const Index h = shape().width;
    MatrixXd dz = (trace.pre_activations[0].array() > 0.0).cast<double>() * d_act.array();
    g(kHiddenW).noalias() = dz * trace.activations[0].transpose();
    g(kHiddenB) = dz.rowwise().sum();
    MatrixXd d_hidden = params_.tensor(kHiddenW).transpose() * dz;

    const Index m = shape().history;
    const auto wh = params_.tensor(kLstmWh);
    const LstmTrace& tr = trace.lstm;
    MatrixXd d_cell = MatrixXd::Zero(h, batch);
    MatrixXd d_gates_all(4 * h, m * batch);
    for (Index k = m - 1; k >= 0; --k) {
      const auto gates = tr.gates.middleCols(k * batch, batch);
      const auto i_g = gates.topRows(h).array();
      const auto f_g = gates.middleRows(h, h).array();
      const auto c_g = gates.middleRows(2 * h, h).array();
      const auto o_g = gates.bottomRows(h).array();
      const auto tanh_cell = tr.tanh_cells.middleCols(k * batch, batch).array();
      const auto prev_cell = tr.cells.middleCols(k * batch, batch).array();

      d_cell.array() += d_hidden.array() * o_g * (1.0 - tanh_cell.square());
      auto d_gates = d_gates_all.middleCols(k * batch, batch);
      d_gates.topRows(h) = (d_cell.array() * c_g * i_g * (1.0 - i_g)).matrix();
      d_gates.middleRows(h, h) = (d_cell.array() * prev_cell * f_g * (1.0 - f_g)).matrix();
      d_gates.middleRows(2 * h, h) = (d_cell.array() * i_g * (1.0 - c_g.square())).matrix();
      d_gates.bottomRows(h) = (d_hidden.array() * tanh_cell * o_g * (1.0 - o_g)).matrix();

      if (k > 0) d_hidden.noalias() = wh.transpose() * d_gates;
      d_cell.array() *= f_g;
    }
    g(kLstmWx).noalias() = d_gates_all * tr.inputs.transpose();
    g(kLstmWh).noalias() = d_gates_all * tr.hiddens.leftCols(m * batch).transpose();
    g(kLstmB) = d_gates_all.rowwise().sum();
  } else {
    for (std::size_t l = static_cast<std::size_t>(shape().hidden_layers); l-- > 0;) {
      MatrixXd dz = (trace.pre_activations[l].array() > 0.0).cast<double>() * d_act.array();
      g(2 * l).noalias() = dz * trace.activations[l].transpose();
      g(2 * l + 1) = dz.rowwise().sum();
      if (l > 0) d_act.noalias() = params_.tensor(2 * l).transpose() * dz;
    }
  }

  gradient.assign(flat.begin(), flat.end());
  for (double v : gradient) {
    if (!std::isfinite(v)) throw Fault("non-finite gradient");
  }
  return loss;
}

void QNetwork::copy_from(const QNetwork& other) {
  if (!(other.shape() == shape())) throw std::invalid_argument("copy_from: shape mismatch");
  std::copy(other.params_.values().begin(), other.params_.values().end(),
            params_.values().begin());
}

RmsProp::RmsProp(std::size_t size, RmsPropConfig cfg) : cfg_(cfg), accumulator_(size, 0.0) {
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("rmsprop: learning rate must be > 0");
  if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) throw std::invalid_argument("rmsprop: rho must lie in [0, 1)");
  if (!(cfg.epsilon >= 0.0)) throw std::invalid_argument("rmsprop: epsilon must be >= 0");
}

void RmsProp::update(std::span<double> params, std::span<const double> gradient) {
  if (params.size() != accumulator_.size() || gradient.size() != accumulator_.size()) {
    throw std::invalid_argument("rmsprop: size mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = gradient[i];
    accumulator_[i] = cfg_.rho * accumulator_[i] + (1.0 - cfg_.rho) * g * g;
    if (g != 0.0) params[i] -= cfg_.learning_rate * g / std::sqrt(accumulator_[i] + cfg_.epsilon);
  }
}

void save_parameters(const Parameters& params, std::ostream& out) {
  const NetworkShape& s = params.shape();
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n'
      << "architecture " << to_string(s.architecture) << '\n'
      << "history " << s.history << '\n'
      << "width " << s.width << '\n'
      << "hidden_layers " << s.hidden_layers << '\n'
      << "tensors " << params.tensors().size() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < params.tensors().size(); ++i) {
    const TensorInfo& t = params.tensors()[i];
    out << t.name << ' ' << t.rows << ' ' << t.cols << '\n';
    const auto view = params.values().subspan(t.offset, t.size());
    for (std::size_t k = 0; k < view.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%a", view[k]);
      out << buf << (k + 1 == view.size() ? '\n' : ' ');
    }
  }
}

Parameters load_parameters(std::istream& in) {
  auto fail = [](const std::string& why) -> Parameters {
    throw std::runtime_error("checkpoint: " + why);
  };
  std::string magic, key, arch;
  int version = 0;
  NetworkShape shape;
  if (!(in >> magic >> version) || magic != kCheckpointMagic) return fail("bad header");
  if (version != kCheckpointVersion) return fail("unsupported version " + std::to_string(version));
  std::size_t count = 0;
  if (!(in >> key >> arch) || key != "architecture") return fail("missing architecture");
  shape.architecture = parse_architecture(arch);
  if (!(in >> key >> shape.history) || key != "history") return fail("missing history");
  if (!(in >> key >> shape.width) || key != "width") return fail("missing width");
  if (!(in >> key >> shape.hidden_layers) || key != "hidden_layers") return fail("missing hidden_layers");
  if (!(in >> key >> count) || key != "tensors") return fail("missing tensor count");

  Parameters params(shape);
  if (count != params.tensors().size()) return fail("tensor count does not match shape");
  for (std::size_t i = 0; i < count; ++i) {
    const TensorInfo& t = params.tensors()[i];
    std::string name;
    Index rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols) || name != t.name || rows != t.rows || cols != t.cols) {
      return fail("tensor " + std::to_string(i) + " header mismatch");
    }
    auto view = params.values().subspan(t.offset, t.size());
    std::string token;
    for (double& v : view) {
      if (!(in >> token)) return fail("truncated tensor " + t.name);
      char* end = nullptr;
      v = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0') return fail("bad value '" + token + "'");
    }
  }
  return params;
}

}  // namespace csdlma::nn
