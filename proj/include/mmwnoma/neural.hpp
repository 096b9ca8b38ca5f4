#pragma once

// Dense multilayer perceptrons with exact reverse-mode gradients, Adam and
// Polyak averaging. Batches are stored column-wise: an input batch is a
// (features x batch) matrix.

#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mmwnoma/common.hpp"

namespace mmwnoma::nn {

enum class OutputActivation { kLinear, kRelu, kSoftplus };

/// layer_sizes = {input, hidden..., output}. Hidden layers use ReLU; the last
/// layer uses `output`.
struct MlpSpec {
  std::vector<int> layer_sizes;
  OutputActivation output = OutputActivation::kLinear;

  void validate() const {
    require(layer_sizes.size() >= 2, "an MLP needs at least an input and an output size");
    for (int s : layer_sizes) require(s > 0, "layer sizes must be positive");
  }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int n_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
};

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Weights of an MLP; gradients and Adam moments share this shape.
struct ParamSet {
  std::vector<DenseLayer> layers;

  std::size_t n_values() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  bool same_shape(const ParamSet& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].weight.rows() != other.layers[i].weight.rows() ||
          layers[i].weight.cols() != other.layers[i].weight.cols() ||
          layers[i].bias.size() != other.layers[i].bias.size()) {
        return false;
      }
    }
    return true;
  }

  ParamSet zeros_like() const {
    ParamSet z;
    z.layers.reserve(layers.size());
    for (const auto& l : layers) {
      z.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    }
    return z;
  }

  /// Visits every scalar parameter in a fixed order (weights row-major, then bias, per layer).
  template <typename F>
  void for_each_value(F&& f) {
    for (auto& l : layers) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) f(l.weight(r, c));
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) f(l.bias[i]);
    }
  }

  ParamSet& operator+=(const ParamSet& other) {
    require(same_shape(other), "parameter shape mismatch");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].weight += other.layers[i].weight;
      layers[i].bias += other.layers[i].bias;
    }
    return *this;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& l : layers) s += l.weight.squaredNorm() + l.bias.squaredNorm();
    return s;
  }

  friend bool operator==(const ParamSet& a, const ParamSet& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
      if (a.layers[i].weight != b.layers[i].weight || a.layers[i].bias != b.layers[i].bias) return false;
    }
    return true;
  }
};

inline ParamSet difference(const ParamSet& a, const ParamSet& b) {
  require(a.same_shape(b), "parameter shape mismatch");
  ParamSet d = a;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    d.layers[i].weight -= b.layers[i].weight;
    d.layers[i].bias -= b.layers[i].bias;
  }
  return d;
}

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
inline ParamSet init_params(const MlpSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  ParamSet p;
  for (int l = 0; l < spec.n_layers(); ++l) {
    const int fan_in = spec.layer_sizes[l];
    const int fan_out = spec.layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Matrix(fan_out, fan_in), Vector(fan_out)};
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = dist(rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

inline bool matches(const MlpSpec& spec, const ParamSet& p) {
  if (static_cast<int>(p.layers.size()) != spec.n_layers()) return false;
  for (int l = 0; l < spec.n_layers(); ++l) {
    if (p.layers[l].weight.rows() != spec.layer_sizes[l + 1] ||
        p.layers[l].weight.cols() != spec.layer_sizes[l] ||
        p.layers[l].bias.size() != spec.layer_sizes[l + 1]) {
      return false;
    }
  }
  return true;
}

inline double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Activations cached by forward for the matching backward call.
struct Tape {
  std::vector<Matrix> inputs;           // input to each layer
  std::vector<Matrix> pre_activations;  // W x + b of each layer
};

inline Matrix forward(const MlpSpec& spec, const ParamSet& params, const Matrix& input,
                      Tape* tape = nullptr) {
  require(matches(spec, params), "parameters do not match the MLP spec");
  if (input.rows() != spec.input_size()) {
    throw Error("input has " + std::to_string(input.rows()) + " features, network expects " +
                std::to_string(spec.input_size()));
  }
  if (tape) {
    tape->inputs.resize(spec.n_layers());
    tape->pre_activations.resize(spec.n_layers());
  }
  Matrix x = input;
  for (int l = 0; l < spec.n_layers(); ++l) {
    const auto& layer = params.layers[l];
    Matrix z(layer.weight.rows(), x.cols());
    z.noalias() = layer.weight * x;
    z.colwise() += layer.bias;
    const bool last = l + 1 == spec.n_layers();
    Matrix y;
    if (!last || spec.output == OutputActivation::kRelu) {
      y = z.cwiseMax(0.0);
    } else if (spec.output == OutputActivation::kSoftplus) {
      y = z.unaryExpr([](double v) { return softplus(v); });
    } else {
      y = z;
    }
    if (tape) {
      tape->inputs[l] = std::move(x);
      tape->pre_activations[l] = std::move(z);
    }
    x = std::move(y);
  }
  return x;
}

/// Single-sample convenience wrapper.
inline Vector evaluate(const MlpSpec& spec, const ParamSet& params, const Vector& input) {
  return forward(spec, params, Matrix(input), nullptr).col(0);
}

/// Gradients of a scalar loss given dLoss/dOutput (same shape as the forward
/// output). Gradients are summed over the batch. If `input_grad` is non-null it
/// receives dLoss/dInput.
inline ParamSet backward(const MlpSpec& spec, const ParamSet& params, const Tape& tape,
                         const Matrix& output_grad, Matrix* input_grad = nullptr) {
  require(matches(spec, params), "parameters do not match the MLP spec");
  require(static_cast<int>(tape.inputs.size()) == spec.n_layers(), "tape does not match the MLP spec");
  const Eigen::Index batch = tape.inputs.front().cols();
  require(output_grad.rows() == spec.output_size() && output_grad.cols() == batch,
          "output gradient shape mismatch");

  ParamSet grads;
  grads.layers.resize(spec.n_layers());
  Matrix delta;
  for (int l = spec.n_layers() - 1; l >= 0; --l) {
    const Matrix& z = tape.pre_activations[l];
    const bool last = l + 1 == spec.n_layers();
    const Matrix& upstream = last ? output_grad : delta;
    Matrix dz;
    if (!last || spec.output == OutputActivation::kRelu) {
      dz = (z.array() > 0.0).select(upstream, 0.0);
    } else if (spec.output == OutputActivation::kSoftplus) {
      dz = upstream.cwiseProduct(z.unaryExpr([](double v) { return sigmoid(v); }));
    } else {
      dz = upstream;
    }
    grads.layers[l].weight.noalias() = dz * tape.inputs[l].transpose();
    grads.layers[l].bias = dz.rowwise().sum();
    if (l > 0 || input_grad) {
      Matrix next(params.layers[l].weight.cols(), batch);
      next.noalias() = params.layers[l].weight.transpose() * dz;
      delta = std::move(next);
    }
  }
  if (input_grad) *input_grad = std::move(delta);
  return grads;
}

struct AdamState {
  ParamSet first_moment;
  ParamSet second_moment;
  long step = 0;
  double learn_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(const ParamSet& shape, double lr)
      : first_moment(shape.zeros_like()), second_moment(shape.zeros_like()), learn_rate(lr) {}
};

/// Bias-corrected Adam. A zero learning rate leaves params bit-identical.
inline void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state) {
  require(params.same_shape(grads) && params.same_shape(state.first_moment) &&
              params.same_shape(state.second_moment),
          "Adam shape mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const double b1 = state.beta1, b2 = state.beta2, lr = state.learn_rate, eps = state.epsilon;
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m.array() = b1 * m.array() + (1.0 - b1) * g.array();
    v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
    if (lr != 0.0) p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    update(params.layers[i].weight, grads.layers[i].weight, state.first_moment.layers[i].weight,
           state.second_moment.layers[i].weight);
    update(params.layers[i].bias, grads.layers[i].bias, state.first_moment.layers[i].bias,
           state.second_moment.layers[i].bias);
  }
}

/// target <- (1 - tau) target + tau online
inline void polyak_update(ParamSet& target, const ParamSet& online, double tau) {
  require(target.same_shape(online), "Polyak shape mismatch");
  require(tau > 0.0 && tau <= 1.0, "tau must lie in (0, 1]");
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    if (tau == 1.0) {
      target.layers[i] = online.layers[i];
      continue;
    }
    target.layers[i].weight += tau * (online.layers[i].weight - target.layers[i].weight);
    target.layers[i].bias += tau * (online.layers[i].bias - target.layers[i].bias);
  }
}

// ---------------------------------------------------------------------------
// Checkpoint text format (all values printed with 17 significant digits so
// every double round-trips exactly):
//
//   params v1 <n_layers>
//   layer <rows> <cols>
//   <rows*cols weights, row-major>
//   <rows biases>
//   ...

inline void write_params(std::ostream& os, const ParamSet& p) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  os << "params v1 " << p.layers.size() << '\n';
  for (const auto& l : p.layers) {
    os << "layer " << l.weight.rows() << ' ' << l.weight.cols() << '\n';
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        os << (r == 0 && c == 0 ? "" : " ") << l.weight(r, c);
      }
    }
    os << '\n';
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) os << (i == 0 ? "" : " ") << l.bias[i];
    os << '\n';
  }
  os.precision(old_precision);
}

namespace detail {
inline void expect_token(std::istream& is, const std::string& expected) {
  std::string token;
  if (!(is >> token) || token != expected) {
    throw Error("malformed checkpoint: expected '" + expected + "', got '" + token + "'");
  }
}

inline double read_double(std::istream& is) {
  std::string token;
  if (!(is >> token)) throw Error("malformed checkpoint: truncated values");
  // strtod rather than stod: subnormals must parse instead of raising out_of_range.
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size()) throw Error("malformed checkpoint: bad number '" + token + "'");
  return v;
}
}  // namespace detail

inline ParamSet read_params(std::istream& is) {
  detail::expect_token(is, "params");
  detail::expect_token(is, "v1");
  long n_layers = 0;
  if (!(is >> n_layers) || n_layers < 0) throw Error("malformed checkpoint: bad layer count");
  ParamSet p;
  for (long i = 0; i < n_layers; ++i) {
    detail::expect_token(is, "layer");
    long rows = 0, cols = 0;
    if (!(is >> rows >> cols) || rows <= 0 || cols <= 0) throw Error("malformed checkpoint: bad layer shape");
    DenseLayer layer{Matrix(rows, cols), Vector(rows)};
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) layer.weight(r, c) = detail::read_double(is);
    for (long r = 0; r < rows; ++r) layer.bias[r] = detail::read_double(is);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

inline void write_adam(std::ostream& os, const AdamState& s) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  os << "adam v1 " << s.step << ' ' << s.learn_rate << ' ' << s.beta1 << ' ' << s.beta2 << ' '
     << s.epsilon << '\n';
  os.precision(old_precision);
  write_params(os, s.first_moment);
  write_params(os, s.second_moment);
}

inline AdamState read_adam(std::istream& is) {
  detail::expect_token(is, "adam");
  detail::expect_token(is, "v1");
  AdamState s;
  if (!(is >> s.step)) throw Error("malformed checkpoint: bad Adam step");
  s.learn_rate = detail::read_double(is);
  s.beta1 = detail::read_double(is);
  s.beta2 = detail::read_double(is);
  s.epsilon = detail::read_double(is);
  s.first_moment = read_params(is);
  s.second_moment = read_params(is);
  require(s.first_moment.same_shape(s.second_moment), "malformed checkpoint: Adam moment shapes differ");
  return s;
}

}  // namespace mmwnoma::nn
