#pragma once

// Off-policy actor-critic agents: soft actor-critic with a tanh-squashed
// Gaussian policy and a deterministic-policy (DDPG) comparison agent.
//
// The critic is concat(state, action) -> dense -> ReLU -> dense -> ReLU -> dense.
// The actor is a dense+ReLU trunk feeding a mean path (dense+ReLU, dense) and
// a std path (dense+ReLU, dense+softplus).

#include <algorithm>
#include <concepts>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "mmwnoma/common.hpp"
#include "mmwnoma/environment.hpp"
#include "mmwnoma/neural.hpp"

namespace mmwnoma {

struct Transition {
  Observation state;
  ActionVector action;
  double reward = 0.0;
  Observation next_state;
  bool done = false;
};

/// Column-stacked minibatch drawn from a ReplayBuffer.
struct Batch {
  Matrix states;       // obs x B
  Matrix actions;      // act x B
  Vector rewards;      // B
  Matrix next_states;  // obs x B
  Vector dones;        // B, 1.0 for terminal

  Eigen::Index size() const { return rewards.size(); }
};

inline Batch make_batch(const std::vector<const Transition*>& items) {
  require(!items.empty(), "empty batch");
  const auto obs = items.front()->state.size();
  const auto act = items.front()->action.size();
  const auto b = static_cast<Eigen::Index>(items.size());
  Batch batch{Matrix(obs, b), Matrix(act, b), Vector(b), Matrix(obs, b), Vector(b)};
  for (Eigen::Index i = 0; i < b; ++i) {
    const Transition& t = *items[i];
    require(t.state.size() == obs && t.next_state.size() == obs && t.action.size() == act,
            "transition dimensions differ within batch");
    batch.states.col(i) = t.state;
    batch.actions.col(i) = t.action;
    batch.rewards[i] = t.reward;
    batch.next_states.col(i) = t.next_state;
    batch.dones[i] = t.done ? 1.0 : 0.0;
  }
  return batch;
}

inline Batch make_batch(const std::vector<Transition>& items) {
  std::vector<const Transition*> ptrs;
  ptrs.reserve(items.size());
  for (const auto& t : items) ptrs.push_back(&t);
  return make_batch(ptrs);
}

/// Fixed-capacity ring buffer; once full, each insertion overwrites the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    require(capacity > 0, "replay capacity must be positive");
  }

  void add(Transition t) {
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(t));
    } else {
      storage_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }

  /// Entry `i` counted from the oldest surviving transition.
  const Transition& at(std::size_t i) const {
    require(i < storage_.size(), "replay index out of range");
    const std::size_t start = storage_.size() < capacity_ ? 0 : next_;
    return storage_[(start + i) % capacity_];
  }

  /// Uniform sampling with replacement.
  Batch sample(std::size_t batch_size, std::mt19937_64& rng) const {
    require(batch_size > 0, "batch size must be positive");
    require(!storage_.empty(), "cannot sample from an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
    std::vector<const Transition*> items(batch_size);
    for (auto& p : items) p = &storage_[pick(rng)];
    return make_batch(items);
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> storage_;
};

struct AgentConfig {
  int hidden_width = 256;
  double discount = 0.99;
  double actor_learn_rate = 1e-3;
  double critic_learn_rate = 1e-3;
  double target_smoothing = 1e-3;  // tau
  double entropy_temp = 0.2;
  std::size_t buffer_capacity = 1'000'000;
  std::size_t batch_size = 128;
  std::size_t warmup = 1000;
  bool twin_critic = false;
  double explore_noise = 0.1;  // DDPG only
  double std_min = 1e-6;
  double std_max = 10.0;

  void validate() const {
    require(hidden_width >= 1, "hidden_width must be positive");
    require(discount >= 0.0 && discount <= 1.0, "discount must lie in [0, 1]");
    require(actor_learn_rate >= 0.0, "actor_learn_rate must be non-negative");
    require(critic_learn_rate >= 0.0, "critic_learn_rate must be non-negative");
    require(target_smoothing > 0.0 && target_smoothing <= 1.0, "target_smoothing must lie in (0, 1]");
    require(entropy_temp >= 0.0, "entropy_temp must be non-negative");
    require(buffer_capacity >= batch_size, "buffer_capacity must be at least batch_size");
    require(batch_size >= 1, "batch_size must be positive");
    require(explore_noise >= 0.0, "explore_noise must be non-negative");
    require(std_min > 0.0 && std_max > std_min, "std clamp range invalid");
  }
};

/// One trainable MLP and its optimizer state.
struct Network {
  nn::MlpSpec spec;
  nn::ParamSet params;
  nn::AdamState adam;

  Network() = default;
  Network(nn::MlpSpec s, double learn_rate, std::mt19937_64& rng)
      : spec(std::move(s)), params(nn::init_params(spec, rng)), adam(params, learn_rate) {}

  Matrix forward(const Matrix& x, nn::Tape* tape = nullptr) const {
    return nn::forward(spec, params, x, tape);
  }
};

inline nn::MlpSpec critic_spec(int obs_size, int act_size, int hidden) {
  return {{obs_size + act_size, hidden, hidden, 1}, nn::OutputActivation::kLinear};
}

// log(1 - tanh(u)^2) without cancellation.
inline double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::log(2.0) - u - nn::softplus(-2.0 * u));
}

/// Gaussian policy squashed through tanh. Also used by the DDPG agent, which
/// only reads the mean path.
class SquashedGaussianActor {
 public:
  struct Pass {
    Matrix mean;     // act x B
    Matrix std_dev;  // act x B, clamped
    Matrix std_raw;  // act x B, softplus output before clamping
    Matrix trunk_out;
    nn::Tape trunk_tape, mean_tape, std_tape;
  };

  struct Sample {
    Matrix pre_squash;  // u = mean + std * noise
    Matrix action;      // tanh(u)
    Vector log_prob;    // B
  };

  struct Grads {
    nn::ParamSet trunk, mean, std_dev;
  };

  SquashedGaussianActor() = default;
  SquashedGaussianActor(int obs_size, int act_size, int hidden, double learn_rate, double std_min,
                        double std_max, std::mt19937_64& rng)
      : trunk_({{obs_size, hidden}, nn::OutputActivation::kRelu}, learn_rate, rng),
        mean_({{hidden, hidden, act_size}, nn::OutputActivation::kLinear}, learn_rate, rng),
        std_({{hidden, hidden, act_size}, nn::OutputActivation::kSoftplus}, learn_rate, rng),
        std_min_(std_min),
        std_max_(std_max) {}

  int observation_size() const { return trunk_.spec.input_size(); }
  int action_size() const { return mean_.spec.output_size(); }

  Pass forward(const Matrix& states, bool need_std = true) const {
    Pass p;
    p.trunk_out = trunk_.forward(states, &p.trunk_tape);
    p.mean = mean_.forward(p.trunk_out, &p.mean_tape);
    if (need_std) {
      p.std_raw = std_.forward(p.trunk_out, &p.std_tape);
      p.std_dev = p.std_raw.cwiseMax(std_min_).cwiseMin(std_max_);
    }
    return p;
  }

  /// Reparameterized sample for fixed standard-normal `noise` (act x B).
  static Sample squash(const Pass& p, const Matrix& noise) {
    require(noise.rows() == p.mean.rows() && noise.cols() == p.mean.cols(), "noise shape mismatch");
    Sample s;
    s.pre_squash = p.mean + p.std_dev.cwiseProduct(noise);
    s.action = s.pre_squash.array().tanh().matrix();
    s.log_prob.resize(p.mean.cols());
    const double half_log_2pi = 0.5 * std::log(2.0 * kPi);
    for (Eigen::Index b = 0; b < p.mean.cols(); ++b) {
      double lp = 0.0;
      for (Eigen::Index i = 0; i < p.mean.rows(); ++i) {
        const double xi = noise(i, b);
        lp += -0.5 * xi * xi - std::log(p.std_dev(i, b)) - half_log_2pi -
              log_one_minus_tanh_sq(s.pre_squash(i, b));
      }
      s.log_prob[b] = lp;
    }
    return s;
  }

  /// Parameter gradients given dLoss/dMean and dLoss/dStd (both act x B).
  /// Entries where the std clamp is active pass no gradient.
  Grads backward(const Pass& p, const Matrix& d_mean, const Matrix* d_std) const {
    Grads g;
    Matrix d_trunk;
    g.mean = nn::backward(mean_.spec, mean_.params, p.mean_tape, d_mean, &d_trunk);
    if (d_std) {
      const Matrix d_raw = ((p.std_raw.array() >= std_min_) && (p.std_raw.array() <= std_max_))
                               .select(*d_std, 0.0);
      Matrix d_trunk_std;
      g.std_dev = nn::backward(std_.spec, std_.params, p.std_tape, d_raw, &d_trunk_std);
      d_trunk += d_trunk_std;
    } else {
      g.std_dev = std_.params.zeros_like();
    }
    g.trunk = nn::backward(trunk_.spec, trunk_.params, p.trunk_tape, d_trunk);
    return g;
  }

  void apply(const Grads& g) {
    nn::adam_step(trunk_.params, g.trunk, trunk_.adam);
    nn::adam_step(mean_.params, g.mean, mean_.adam);
    nn::adam_step(std_.params, g.std_dev, std_.adam);
  }

  Network& trunk() { return trunk_; }
  Network& mean_head() { return mean_; }
  Network& std_head() { return std_; }
  const Network& trunk() const { return trunk_; }
  const Network& mean_head() const { return mean_; }
  const Network& std_head() const { return std_; }
  double std_min() const { return std_min_; }
  double std_max() const { return std_max_; }

  void write(std::ostream& os) const {
    for (const Network* n : {&trunk_, &mean_, &std_}) {
      nn::write_params(os, n->params);
      nn::write_adam(os, n->adam);
    }
  }

  void read(std::istream& is) {
    for (Network* n : {&trunk_, &mean_, &std_}) {
      auto params = nn::read_params(is);
      auto adam = nn::read_adam(is);
      require(nn::matches(n->spec, params) && params.same_shape(adam.first_moment),
              "checkpoint actor shape does not match configuration");
      n->params = std::move(params);
      n->adam = std::move(adam);
    }
  }

 private:
  Network trunk_, mean_, std_;
  double std_min_ = 1e-6;
  double std_max_ = 10.0;
};

inline Matrix concat_rows(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

/// Eq-style soft Bellman target: r + gamma * (1 - done) * next_soft_value.
inline double soft_bellman_target(double reward, double discount, bool done, double next_soft_value) {
  return done ? reward : reward + discount * next_soft_value;
}

struct LossAndGrad {
  double loss = 0.0;
  std::vector<nn::ParamSet> grads;  // one per critic
};

struct ActorLossAndGrad {
  double loss = 0.0;
  SquashedGaussianActor::Grads grads;
};

struct UpdateLosses {
  double critic = 0.0;
  double actor = 0.0;
};

/// Shared critic plumbing for SAC and DDPG.
class CriticSet {
 public:
  CriticSet() = default;
  CriticSet(int obs_size, int act_size, const AgentConfig& cfg, std::mt19937_64& rng) {
    const int n = cfg.twin_critic ? 2 : 1;
    for (int i = 0; i < n; ++i) online_.emplace_back(critic_spec(obs_size, act_size, cfg.hidden_width),
                                                     cfg.critic_learn_rate, rng);
    targets_ = online_;
  }

  std::size_t count() const { return online_.size(); }
  std::vector<Network>& online() { return online_; }
  std::vector<Network>& targets() { return targets_; }
  const std::vector<Network>& online() const { return online_; }
  const std::vector<Network>& targets() const { return targets_; }

  /// Elementwise min over critics (1 x B).
  Vector evaluate(const std::vector<Network>& nets, const Matrix& states, const Matrix& actions) const {
    const Matrix input = concat_rows(states, actions);
    Vector q = nets.front().forward(input).row(0).transpose();
    for (std::size_t i = 1; i < nets.size(); ++i) q = q.cwiseMin(Vector(nets[i].forward(input).row(0).transpose()));
    return q;
  }

  /// Mean squared residual against fixed targets; gradients for every online critic.
  LossAndGrad loss_and_grad(const Matrix& states, const Matrix& actions, const Vector& targets) const {
    const auto b = static_cast<double>(targets.size());
    const Matrix input = concat_rows(states, actions);
    LossAndGrad out;
    for (const auto& net : online_) {
      nn::Tape tape;
      const Matrix q = net.forward(input, &tape);
      const Vector residual = q.row(0).transpose() - targets;
      out.loss += residual.squaredNorm() / b;
      const Matrix d_out = (2.0 / b) * residual.transpose();
      out.grads.push_back(nn::backward(net.spec, net.params, tape, d_out));
    }
    out.loss /= static_cast<double>(online_.size());
    return out;
  }

  /// Q(s, a) using the min-critic per sample and dQ/da for that critic.
  void value_and_action_grad(const Matrix& states, const Matrix& actions, Vector& q, Matrix& d_action) const {
    const Matrix input = concat_rows(states, actions);
    const Eigen::Index b = states.cols();
    const auto obs = states.rows();
    const auto act = actions.rows();
    q = Vector::Constant(b, std::numeric_limits<double>::infinity());
    d_action = Matrix::Zero(act, b);
    for (const auto& net : online_) {
      nn::Tape tape;
      const Matrix qi = net.forward(input, &tape);
      Matrix d_input;
      nn::backward(net.spec, net.params, tape, Matrix::Ones(1, b), &d_input);
      for (Eigen::Index j = 0; j < b; ++j) {
        if (qi(0, j) < q[j]) {
          q[j] = qi(0, j);
          d_action.col(j) = d_input.block(obs, j, act, 1);
        }
      }
    }
  }

  void apply(const std::vector<nn::ParamSet>& grads, double tau) {
    for (std::size_t i = 0; i < online_.size(); ++i) {
      nn::adam_step(online_[i].params, grads[i], online_[i].adam);
      nn::polyak_update(targets_[i].params, online_[i].params, tau);
    }
  }

  void write(std::ostream& os) const {
    for (std::size_t i = 0; i < online_.size(); ++i) {
      nn::write_params(os, online_[i].params);
      nn::write_adam(os, online_[i].adam);
      nn::write_params(os, targets_[i].params);
    }
  }

  void read(std::istream& is) {
    for (std::size_t i = 0; i < online_.size(); ++i) {
      auto params = nn::read_params(is);
      auto adam = nn::read_adam(is);
      auto target = nn::read_params(is);
      require(nn::matches(online_[i].spec, params) && nn::matches(online_[i].spec, target) &&
                  params.same_shape(adam.first_moment),
              "checkpoint critic shape does not match configuration");
      online_[i].params = std::move(params);
      online_[i].adam = std::move(adam);
      targets_[i].params = std::move(target);
    }
  }

 private:
  std::vector<Network> online_;
  std::vector<Network> targets_;
};

inline Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n01(rng);
  return m;
}

inline void check_dims(const Batch& batch, int obs, int act) {
  require(batch.size() > 0, "empty batch");
  require(batch.states.rows() == obs && batch.next_states.rows() == obs && batch.actions.rows() == act,
          "batch dimensions do not match the agent");
}

class SacAgent {
 public:
  static constexpr const char* kKind = "sac";

  SacAgent(int obs_size, int act_size, AgentConfig cfg, Seed seed)
      : cfg_(std::move(cfg)), rng_(seed) {
    cfg_.validate();
    actor_ = SquashedGaussianActor(obs_size, act_size, cfg_.hidden_width, cfg_.actor_learn_rate,
                                   cfg_.std_min, cfg_.std_max, rng_);
    critics_ = CriticSet(obs_size, act_size, cfg_, rng_);
  }

  int observation_size() const { return actor_.observation_size(); }
  int action_size() const { return actor_.action_size(); }
  const AgentConfig& config() const { return cfg_; }
  AgentConfig& mutable_config() { return cfg_; }
  SquashedGaussianActor& actor() { return actor_; }
  const SquashedGaussianActor& actor() const { return actor_; }
  CriticSet& critics() { return critics_; }
  const CriticSet& critics() const { return critics_; }
  std::mt19937_64& rng() { return rng_; }

  struct ActionSample {
    ActionVector action;
    double log_prob = 0.0;  // meaningless in deterministic mode
  };

  ActionSample sample_action(const Observation& obs, bool deterministic) {
    require(obs.size() == observation_size(), "observation length mismatch");
    const auto pass = actor_.forward(Matrix(obs), !deterministic);
    if (deterministic) return {pass.mean.col(0).array().tanh().matrix(), 0.0};
    const Matrix noise = standard_normal(pass.mean.rows(), 1, rng_);
    const auto s = SquashedGaussianActor::squash(pass, noise);
    return {s.action.col(0), s.log_prob[0]};
  }

  ActionVector act(const Observation& obs, bool explore) { return sample_action(obs, !explore).action; }

  /// Soft targets for a batch with fresh next actions a' ~ pi(.|s').
  Vector soft_targets(const Batch& batch) {
    const Matrix noise = standard_normal(action_size(), batch.size(), rng_);
    return soft_targets(batch, noise);
  }

  /// Soft targets with the next-action noise supplied.
  Vector soft_targets(const Batch& batch, const Matrix& next_noise) const {
    check_dims(batch, observation_size(), action_size());
    const auto pass = actor_.forward(batch.next_states);
    const auto next = SquashedGaussianActor::squash(pass, next_noise);
    const Vector q_next = critics_.evaluate(critics_.targets(), batch.next_states, next.action);
    Vector y(batch.size());
    for (Eigen::Index i = 0; i < batch.size(); ++i) {
      const double soft_value = q_next[i] - cfg_.entropy_temp * next.log_prob[i];
      y[i] = soft_bellman_target(batch.rewards[i], cfg_.discount, batch.dones[i] > 0.5, soft_value);
    }
    return y;
  }

  double soft_target(const Transition& t) { return soft_targets(make_batch(std::vector<Transition>{t}))[0]; }

  LossAndGrad critic_loss_and_grad(const Batch& batch, const Vector& targets) const {
    check_dims(batch, observation_size(), action_size());
    require(targets.size() == batch.size(), "target count mismatch");
    return critics_.loss_and_grad(batch.states, batch.actions, targets);
  }

  /// Returns the loss before the step; one Adam step on the critic, then Polyak on the target.
  double critic_update(const Batch& batch) {
    require(batch.size() > 0, "empty batch");
    const Vector y = soft_targets(batch);
    auto lg = critic_loss_and_grad(batch, y);
    critics_.apply(lg.grads, cfg_.target_smoothing);
    return lg.loss;
  }

  /// mean_b [entropy_temp * log pi(a_b|s_b) - Q(s_b, a_b)] with a_b = tanh(mu + sigma * noise_b).
  ActorLossAndGrad actor_loss_and_grad(const Matrix& states, const Matrix& noise) const {
    require(states.cols() > 0, "empty batch");
    require(states.rows() == observation_size(), "state dimension mismatch");
    const auto b = static_cast<double>(states.cols());
    const auto pass = actor_.forward(states);
    const auto s = SquashedGaussianActor::squash(pass, noise);
    Vector q;
    Matrix dq_da;
    critics_.value_and_action_grad(states, s.action, q, dq_da);

    const double temp = cfg_.entropy_temp;
    ActorLossAndGrad out;
    out.loss = (temp * s.log_prob - q).sum() / b;
    // d/du [-log(1 - tanh(u)^2)] = 2 tanh(u)
    const Matrix d_u = (2.0 * temp / b) * s.action.array() -
                       (1.0 / b) * dq_da.array() * (1.0 - s.action.array().square());
    const Matrix d_std = d_u.cwiseProduct(noise) - (temp / b) * pass.std_dev.cwiseInverse();
    out.grads = actor_.backward(pass, d_u, &d_std);
    return out;
  }

  double actor_update(const Batch& batch) {
    check_dims(batch, observation_size(), action_size());
    const Matrix noise = standard_normal(action_size(), batch.size(), rng_);
    auto lg = actor_loss_and_grad(batch.states, noise);
    actor_.apply(lg.grads);
    return lg.loss;
  }

  UpdateLosses update(const Batch& batch) {
    UpdateLosses l;
    l.critic = critic_update(batch);
    l.actor = actor_update(batch);
    return l;
  }

  void save(std::ostream& os) const {
    os << "agent " << kKind << " v1 " << observation_size() << ' ' << action_size() << ' '
       << cfg_.hidden_width << ' ' << critics_.count() << '\n';
    actor_.write(os);
    critics_.write(os);
  }

  void load(std::istream& is) {
    read_agent_header(is, kKind);
    actor_.read(is);
    critics_.read(is);
  }

  void read_agent_header(std::istream& is, const std::string& kind) const {
    std::string tag, k, version;
    int obs = 0, act = 0, hidden = 0;
    std::size_t n_critics = 0;
    if (!(is >> tag >> k >> version >> obs >> act >> hidden >> n_critics) || tag != "agent" ||
        version != "v1") {
      throw Error("malformed agent checkpoint header");
    }
    if (k != kind) throw Error("checkpoint holds a '" + k + "' agent, expected '" + kind + "'");
    if (obs != observation_size() || act != action_size()) {
      throw Error("checkpoint dimensions (" + std::to_string(obs) + ", " + std::to_string(act) +
                  ") do not match configuration (" + std::to_string(observation_size()) + ", " +
                  std::to_string(action_size()) + ")");
    }
    require(hidden == cfg_.hidden_width, "checkpoint hidden width does not match configuration");
    require(n_critics == critics_.count(), "checkpoint critic count does not match configuration");
  }

 private:
  AgentConfig cfg_;
  std::mt19937_64 rng_;
  SquashedGaussianActor actor_;
  CriticSet critics_;
};

/// Deterministic policy a = tanh(mean(s)) with Gaussian exploration noise and
/// target actor/critic. Reuses the actor class and ignores its std path.
class DdpgAgent {
 public:
  static constexpr const char* kKind = "ddpg";

  DdpgAgent(int obs_size, int act_size, AgentConfig cfg, Seed seed) : cfg_(std::move(cfg)), rng_(seed) {
    cfg_.twin_critic = false;
    cfg_.validate();
    actor_ = SquashedGaussianActor(obs_size, act_size, cfg_.hidden_width, cfg_.actor_learn_rate,
                                   cfg_.std_min, cfg_.std_max, rng_);
    target_actor_ = actor_;
    critics_ = CriticSet(obs_size, act_size, cfg_, rng_);
  }

  int observation_size() const { return actor_.observation_size(); }
  int action_size() const { return actor_.action_size(); }
  const AgentConfig& config() const { return cfg_; }
  SquashedGaussianActor& actor() { return actor_; }
  const SquashedGaussianActor& actor() const { return actor_; }
  CriticSet& critics() { return critics_; }

  ActionVector deterministic_action(const Observation& obs) const {
    require(obs.size() == observation_size(), "observation length mismatch");
    return actor_.forward(Matrix(obs), false).mean.col(0).array().tanh().matrix();
  }

  ActionVector act(const Observation& obs, bool explore) {
    ActionVector a = deterministic_action(obs);
    if (!explore || cfg_.explore_noise == 0.0) return a;
    std::normal_distribution<double> noise(0.0, cfg_.explore_noise);
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = std::clamp(a[i] + noise(rng_), -1.0, 1.0);
    return a;
  }

  Vector targets(const Batch& batch) const {
    const Matrix next_action = target_actor_.forward(batch.next_states, false).mean.array().tanh().matrix();
    const Vector q_next = critics_.evaluate(critics_.targets(), batch.next_states, next_action);
    Vector y(batch.size());
    for (Eigen::Index i = 0; i < batch.size(); ++i)
      y[i] = soft_bellman_target(batch.rewards[i], cfg_.discount, batch.dones[i] > 0.5, q_next[i]);
    return y;
  }

  /// -mean_b Q(s_b, tanh(mean(s_b)))
  ActorLossAndGrad actor_loss_and_grad(const Matrix& states) const {
    require(states.cols() > 0, "empty batch");
    const auto b = static_cast<double>(states.cols());
    const auto pass = actor_.forward(states, false);
    const Matrix action = pass.mean.array().tanh().matrix();
    Vector q;
    Matrix dq_da;
    critics_.value_and_action_grad(states, action, q, dq_da);
    ActorLossAndGrad out;
    out.loss = -q.sum() / b;
    const Matrix d_mean = -(1.0 / b) * (dq_da.array() * (1.0 - action.array().square())).matrix();
    out.grads = actor_.backward(pass, d_mean, nullptr);
    return out;
  }

  UpdateLosses ddpg_update(const Batch& batch) {
    check_dims(batch, observation_size(), action_size());
    UpdateLosses l;
    const Vector y = targets(batch);
    auto critic = critics_.loss_and_grad(batch.states, batch.actions, y);
    critics_.apply(critic.grads, cfg_.target_smoothing);
    l.critic = critic.loss;

    auto actor = actor_loss_and_grad(batch.states);
    actor_.apply(actor.grads);
    l.actor = actor.loss;
    nn::polyak_update(target_actor_.trunk().params, actor_.trunk().params, cfg_.target_smoothing);
    nn::polyak_update(target_actor_.mean_head().params, actor_.mean_head().params, cfg_.target_smoothing);
    return l;
  }

  UpdateLosses update(const Batch& batch) { return ddpg_update(batch); }

  void save(std::ostream& os) const {
    os << "agent " << kKind << " v1 " << observation_size() << ' ' << action_size() << ' '
       << cfg_.hidden_width << ' ' << critics_.count() << '\n';
    actor_.write(os);
    target_actor_.write(os);
    critics_.write(os);
  }

  void load(std::istream& is) {
    std::string tag, k, version;
    int obs = 0, act = 0, hidden = 0;
    std::size_t n_critics = 0;
    if (!(is >> tag >> k >> version >> obs >> act >> hidden >> n_critics) || tag != "agent" ||
        version != "v1") {
      throw Error("malformed agent checkpoint header");
    }
    if (k != kKind) throw Error("checkpoint holds a '" + k + "' agent, expected 'ddpg'");
    require(obs == observation_size() && act == action_size(),
            "checkpoint dimensions do not match configuration");
    require(hidden == cfg_.hidden_width, "checkpoint hidden width does not match configuration");
    actor_.read(is);
    target_actor_.read(is);
    critics_.read(is);
  }

 private:
  AgentConfig cfg_;
  std::mt19937_64 rng_;
  SquashedGaussianActor actor_;
  SquashedGaussianActor target_actor_;
  CriticSet critics_;
};

// ---------------------------------------------------------------------------
// Training loop

struct LearningCurve {
  std::vector<double> mean_reward;  // per-episode mean immediate reward
  std::vector<double> moving_avg;   // trailing window over mean_reward

  std::size_t episodes() const { return mean_reward.size(); }
};

/// Trailing mean over episodes max(0, e - window + 1) .. e.
inline std::vector<double> trailing_average(const std::vector<double>& values, std::size_t window) {
  require(window >= 1, "moving-average window must be positive");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t e = 0; e < values.size(); ++e) {
    sum += values[e];
    if (e >= window) sum -= values[e - window];
    out[e] = sum / static_cast<double>(std::min(e + 1, window));
  }
  return out;
}

struct TrainOptions {
  int episodes = 100;
  std::size_t moving_average = 25;
  int updates_per_step = 1;
  /// Called after every episode with (episode index, mean reward, moving average).
  std::function<void(int, double, double)> on_episode;
};

template <typename Agent>
concept TrainableAgent = requires(Agent a, const Observation& o, const Batch& b) {
  { a.act(o, true) } -> std::convertible_to<ActionVector>;
  { a.update(b) } -> std::convertible_to<UpdateLosses>;
  { a.config() } -> std::convertible_to<const AgentConfig&>;
};

/// Act, store, and once the buffer holds `warmup` (and at least a batch of)
/// transitions run `updates_per_step` agent updates per environment step.
template <TrainableAgent Agent>
LearningCurve train(Agent& agent, Environment& env, const TrainOptions& opts, Seed seed) {
  require(opts.episodes >= 1, "episodes must be positive");
  const AgentConfig& cfg = agent.config();
  require(cfg.buffer_capacity >= cfg.batch_size, "buffer capacity must be at least the batch size");
  require(agent.observation_size() == env.config().observation_size() &&
              agent.action_size() == env.config().action_size(),
          "agent dimensions do not match the environment");

  std::mt19937_64 sampler(seed);
  ReplayBuffer buffer(std::min<std::size_t>(
      cfg.buffer_capacity,
      static_cast<std::size_t>(opts.episodes) * static_cast<std::size_t>(env.config().steps_per_episode)));
  const std::size_t ready_at = std::max(cfg.warmup, cfg.batch_size);

  LearningCurve curve;
  for (int episode = 0; episode < opts.episodes; ++episode) {
    Observation obs = env.reset();
    double total = 0.0;
    int steps = 0;
    bool done = false;
    while (!done) {
      ActionVector action = agent.act(obs, true);
      StepResult r = env.step(action);
      total += r.reward;
      ++steps;
      done = r.done;
      buffer.add({std::move(obs), std::move(action), r.reward, r.observation, r.done});
      obs = std::move(r.observation);
      if (buffer.size() >= ready_at) {
        for (int u = 0; u < opts.updates_per_step; ++u) agent.update(buffer.sample(cfg.batch_size, sampler));
      }
    }
    curve.mean_reward.push_back(total / steps);
    curve.moving_avg = trailing_average(curve.mean_reward, opts.moving_average);
    if (opts.on_episode) opts.on_episode(episode, curve.mean_reward.back(), curve.moving_avg.back());
  }
  return curve;
}

}  // namespace mmwnoma
