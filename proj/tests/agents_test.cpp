#include "mmwnoma/agents.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

namespace mmwnoma {
namespace {

constexpr int kObs = 5;
constexpr int kAct = 3;

AgentConfig tiny_config() {
  AgentConfig cfg;
  cfg.hidden_width = 8;
  cfg.batch_size = 4;
  cfg.warmup = 4;
  cfg.buffer_capacity = 64;
  return cfg;
}

Batch random_batch(int n, std::mt19937_64& rng, int obs = kObs, int act = kAct) {
  std::vector<Transition> items;
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.state = Vector(obs);
    t.next_state = Vector(obs);
    t.action = Vector(act);
    for (int j = 0; j < obs; ++j) {
      t.state[j] = n01(rng);
      t.next_state[j] = n01(rng);
    }
    for (int j = 0; j < act; ++j) t.action[j] = u(rng);
    t.reward = n01(rng);
    t.done = i % 3 == 0;
    items.push_back(t);
  }
  return make_batch(items);
}

std::vector<double*> slots_of(nn::ParamSet& p) {
  std::vector<double*> out;
  p.for_each_value([&](double& v) { out.push_back(&v); });
  return out;
}

std::vector<double> values_of(nn::ParamSet p) {
  std::vector<double> out;
  p.for_each_value([&](double& v) { out.push_back(v); });
  return out;
}

// Relative error with an absolute floor; kinks make a few FD entries useless,
// so the check counts entries above tolerance instead of demanding all.
struct GradCheck {
  int checked = 0;
  int bad = 0;
  void add(double analytic, double numeric, double rel_tol) {
    ++checked;
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    if (std::abs(analytic - numeric) / scale > rel_tol) ++bad;
  }
};

// ---------------------------------------------------------------------------
// Replay buffer

TEST(ReplayBuffer, OverwritesOldestFirst) {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) buf.add({Vector::Constant(1, i), Vector::Zero(1), double(i), Vector::Zero(1), false});
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_DOUBLE_EQ(buf.at(0).reward, 2.0);
  EXPECT_DOUBLE_EQ(buf.at(2).reward, 4.0);
}

TEST(ReplayBuffer, NeverExceedsCapacity) {
  std::mt19937_64 rng(1);
  const std::size_t cap = 17;
  ReplayBuffer buf(cap);
  for (std::size_t i = 0; i < cap + 40; ++i) {
    buf.add({Vector::Constant(1, double(i)), Vector::Zero(1), double(i), Vector::Zero(1), false});
    ASSERT_LE(buf.size(), cap);
  }
  // After cap + m insertions the oldest m are gone.
  EXPECT_DOUBLE_EQ(buf.at(0).reward, 40.0);
  const Batch b = buf.sample(200, rng);
  EXPECT_GE(b.rewards.minCoeff(), 40.0);
}

TEST(ReplayBuffer, RejectsBadUse) {
  EXPECT_THROW(ReplayBuffer(0), Error);
  ReplayBuffer buf(2);
  std::mt19937_64 rng(1);
  EXPECT_THROW(buf.sample(1, rng), Error);
}

// ---------------------------------------------------------------------------
// Policy sampling

TEST(SampleAction, OutputsInsideOpenBox) {
  SacAgent agent(kObs, kAct, tiny_config(), 3);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  for (int i = 0; i < 200; ++i) {
    Vector obs(kObs);
    for (int j = 0; j < kObs; ++j) obs[j] = 3.0 * n01(rng);
    for (bool det : {false, true}) {
      const auto s = agent.sample_action(obs, det);
      ASSERT_EQ(s.action.size(), kAct);
      EXPECT_LT(s.action.cwiseAbs().maxCoeff(), 1.0);
    }
  }
  EXPECT_THROW(agent.sample_action(Vector::Zero(kObs + 1), true), Error);
}

TEST(SampleAction, DeterministicModeIsTanhMean) {
  SacAgent agent(kObs, kAct, tiny_config(), 3);
  const Vector obs = Vector::LinSpaced(kObs, -1.0, 1.0);
  const auto pass = agent.actor().forward(Matrix(obs));
  const Vector expected = pass.mean.col(0).array().tanh();
  EXPECT_EQ(agent.sample_action(obs, true).action, expected);
  EXPECT_EQ(agent.sample_action(obs, true).action, agent.sample_action(obs, true).action);
}

TEST(SampleAction, VanishingStdCollapsesToTanhMean) {
  SacAgent agent(kObs, kAct, tiny_config(), 3);
  // Force the std head far negative so softplus output is clamped at std_min.
  auto& out = agent.actor().std_head().params.layers.back();
  out.weight.setZero();
  out.bias.setConstant(-60.0);
  const Vector obs = Vector::LinSpaced(kObs, -1.0, 1.0);
  const Vector mean_action = agent.sample_action(obs, true).action;
  for (int i = 0; i < 20; ++i) EXPECT_LT((agent.sample_action(obs, false).action - mean_action).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(SampleAction, MonteCarloMeanOfPreSquashSamples) {
  SacAgent agent(kObs, kAct, tiny_config(), 7);
  const Vector obs = Vector::LinSpaced(kObs, -0.5, 0.8);
  const auto pass = agent.actor().forward(Matrix(obs));
  const int n = 100000;
  std::mt19937_64 rng(11);
  const Matrix noise = standard_normal(kAct, n, rng);
  SquashedGaussianActor::Pass wide = pass;
  wide.mean = pass.mean.replicate(1, n);
  wide.std_dev = pass.std_dev.replicate(1, n);
  const auto s = SquashedGaussianActor::squash(wide, noise);
  const Vector empirical = s.pre_squash.rowwise().mean();
  for (int i = 0; i < kAct; ++i) {
    EXPECT_NEAR(empirical[i], pass.mean(i, 0), 3.0 * pass.std_dev(i, 0) / std::sqrt(double(n)));
  }
}

// Independent density: Gaussian pdf at u = atanh(a), times |du/da| = 1 / (1 - a^2).
TEST(SampleAction, LogProbMatchesNumericalDensity) {
  SacAgent agent(kObs, kAct, tiny_config(), 9);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 50; ++trial) {
    Vector obs(kObs);
    for (int j = 0; j < kObs; ++j) obs[j] = n01(rng);
    const auto pass = agent.actor().forward(Matrix(obs));
    const Matrix noise = standard_normal(kAct, 1, rng);
    const auto s = SquashedGaussianActor::squash(pass, noise);
    double log_density = 0.0;
    for (int i = 0; i < kAct; ++i) {
      const double a = s.action(i, 0);
      const double u = std::atanh(a);
      const double mu = pass.mean(i, 0), sd = pass.std_dev(i, 0);
      const double gauss = std::exp(-0.5 * (u - mu) * (u - mu) / (sd * sd)) / (sd * std::sqrt(2.0 * kPi));
      log_density += std::log(gauss / (1.0 - a * a));
    }
    EXPECT_NEAR(s.log_prob[0], log_density, 1e-6);
  }
}

// ---------------------------------------------------------------------------
// Soft target

TEST(SoftTarget, BellmanArithmetic) {
  EXPECT_NEAR(soft_bellman_target(1.0, 0.99, false, 2.0), 2.98, 1e-15);
  EXPECT_DOUBLE_EQ(soft_bellman_target(1.5, 0.99, true, 123.0), 1.5);
  EXPECT_DOUBLE_EQ(soft_bellman_target(1.5, 0.0, false, 123.0), 1.5);
}

TEST(SoftTarget, TerminalAndZeroDiscountGiveReward) {
  SacAgent agent(kObs, kAct, tiny_config(), 2);
  Transition t{Vector::Ones(kObs), Vector::Zero(kAct), 0.7, Vector::Ones(kObs), true};
  EXPECT_DOUBLE_EQ(agent.soft_target(t), 0.7);
  AgentConfig cfg = tiny_config();
  cfg.discount = 0.0;
  SacAgent myopic(kObs, kAct, cfg, 2);
  t.done = false;
  EXPECT_DOUBLE_EQ(myopic.soft_target(t), 0.7);
}

TEST(SoftTarget, UsesTargetCriticAndEntropy) {
  SacAgent agent(kObs, kAct, tiny_config(), 2);
  std::mt19937_64 rng(3);
  const Batch batch = random_batch(6, rng);
  const Matrix noise = standard_normal(kAct, 6, rng);
  const Vector y = agent.soft_targets(batch, noise);
  const auto pass = agent.actor().forward(batch.next_states);
  const auto next = SquashedGaussianActor::squash(pass, noise);
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const Vector input = (Vector(kObs + kAct) << batch.next_states.col(i), next.action.col(i)).finished();
    const double q = nn::evaluate(agent.critics().targets()[0].spec, agent.critics().targets()[0].params, input)[0];
    const double expected = batch.dones[i] > 0.5 ? batch.rewards[i]
                                                  : batch.rewards[i] + 0.99 * (q - 0.2 * next.log_prob[i]);
    EXPECT_NEAR(y[i], expected, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Critic loss

TEST(CriticLoss, SingleResidual) {
  SacAgent agent(kObs, kAct, tiny_config(), 2);
  std::mt19937_64 rng(3);
  Batch batch = random_batch(1, rng);
  auto& net = agent.critics().online()[0];
  net.params.layers.back().weight.setZero();
  net.params.layers.back().bias.setConstant(3.0);
  const auto lg = agent.critic_loss_and_grad(batch, Vector::Constant(1, 2.0));
  EXPECT_DOUBLE_EQ(lg.loss, 1.0);
}

TEST(CriticLoss, FixedPointHasZeroLossAndGradient) {
  SacAgent agent(kObs, kAct, tiny_config(), 2);
  std::mt19937_64 rng(3);
  const Batch batch = random_batch(5, rng);
  const Vector q = agent.critics().evaluate(agent.critics().online(), batch.states, batch.actions);
  const auto lg = agent.critic_loss_and_grad(batch, q);
  EXPECT_DOUBLE_EQ(lg.loss, 0.0);
  EXPECT_DOUBLE_EQ(lg.grads[0].squared_norm(), 0.0);
}

TEST(CriticLoss, GradientMatchesFiniteDifferences) {
  for (bool twin : {false, true}) {
    AgentConfig cfg = tiny_config();
    cfg.hidden_width = 16;
    cfg.twin_critic = twin;
    SacAgent agent(kObs, kAct, cfg, 21);
    std::mt19937_64 rng(8);
    const Batch batch = random_batch(7, rng);
    const Matrix noise = standard_normal(kAct, 7, rng);
    const Vector y = agent.soft_targets(batch, noise);
    const auto lg = agent.critic_loss_and_grad(batch, y);
    GradCheck check;
    for (std::size_t c = 0; c < agent.critics().count(); ++c) {
      auto& params = agent.critics().online()[c].params;
      const auto analytic = values_of(lg.grads[c]);
      auto slots = slots_of(params);
      const double scale = static_cast<double>(agent.critics().count());
      for (std::size_t i = 0; i < slots.size(); ++i) {
        const double saved = *slots[i];
        *slots[i] = saved + 1e-6;
        const double up = agent.critic_loss_and_grad(batch, y).loss;
        *slots[i] = saved - 1e-6;
        const double down = agent.critic_loss_and_grad(batch, y).loss;
        *slots[i] = saved;
        // Reported loss is averaged over critics; each critic's gradient is of its own term.
        check.add(analytic[i], scale * (up - down) / 2e-6, 1e-3);
      }
    }
    EXPECT_GT(check.checked, 300);
    EXPECT_LE(check.bad, check.checked / 100) << "twin=" << twin;
  }
}

TEST(CriticUpdate, EmptyBatchThrowsAndTargetsTrackOnline) {
  SacAgent agent(kObs, kAct, tiny_config(), 4);
  EXPECT_THROW(agent.critic_update(Batch{}), Error);
  std::mt19937_64 rng(3);
  const Batch batch = random_batch(8, rng);
  const auto target_before = agent.critics().targets()[0].params;
  agent.critic_update(batch);
  const auto& online = agent.critics().online()[0].params;
  const auto& target_after = agent.critics().targets()[0].params;
  const double moved = std::sqrt(nn::difference(target_after, target_before).squared_norm());
  const double gap = std::sqrt(nn::difference(online, target_before).squared_norm());
  EXPECT_LE(moved, agent.config().target_smoothing * gap * (1.0 + 1e-12));
  EXPECT_GT(moved, 0.0);
}

// ---------------------------------------------------------------------------
// Actor loss

TEST(ActorLoss, GradientMatchesFiniteDifferences) {
  for (bool twin : {false, true}) {
    AgentConfig cfg = tiny_config();
    cfg.hidden_width = 16;
    cfg.twin_critic = twin;
    SacAgent agent(kObs, kAct, cfg, 31);
    std::mt19937_64 rng(12);
    const Batch batch = random_batch(6, rng);
    const Matrix noise = standard_normal(kAct, 6, rng);
    const auto lg = agent.actor_loss_and_grad(batch.states, noise);
    GradCheck check;
    auto run = [&](nn::ParamSet& params, const nn::ParamSet& grads) {
      const auto analytic = values_of(grads);
      auto slots = slots_of(params);
      for (std::size_t i = 0; i < slots.size(); ++i) {
        const double saved = *slots[i];
        *slots[i] = saved + 1e-6;
        const double up = agent.actor_loss_and_grad(batch.states, noise).loss;
        *slots[i] = saved - 1e-6;
        const double down = agent.actor_loss_and_grad(batch.states, noise).loss;
        *slots[i] = saved;
        check.add(analytic[i], (up - down) / 2e-6, 1e-3);
      }
    };
    run(agent.actor().trunk().params, lg.grads.trunk);
    run(agent.actor().mean_head().params, lg.grads.mean);
    run(agent.actor().std_head().params, lg.grads.std_dev);
    EXPECT_GT(check.checked, 500);
    EXPECT_LE(check.bad, check.checked / 100) << "twin=" << twin;
  }
}

TEST(ActorLoss, EntropyTermIsLinearInTemperature) {
  std::mt19937_64 rng(12);
  const Batch batch = random_batch(6, rng);
  const Matrix noise = standard_normal(kAct, 6, rng);
  double previous = -std::numeric_limits<double>::infinity();
  AgentConfig cfg = tiny_config();
  cfg.entropy_temp = 0.0;
  SacAgent base(kObs, kAct, cfg, 31);
  const double q_part = base.actor_loss_and_grad(batch.states, noise).loss;
  const auto pass = base.actor().forward(batch.states);
  const double mean_log_prob = SquashedGaussianActor::squash(pass, noise).log_prob.mean();
  for (double temp : {0.0, 0.1, 0.2, 0.5}) {
    cfg.entropy_temp = temp;
    SacAgent agent(kObs, kAct, cfg, 31);  // same seed, same weights
    const double loss = agent.actor_loss_and_grad(batch.states, noise).loss;
    EXPECT_NEAR(loss - q_part, temp * mean_log_prob, 1e-12);
    if (mean_log_prob > 0) EXPECT_GT(loss, previous);
    previous = loss;
  }
}

TEST(ActorLoss, ZeroTemperatureAscendsCritic) {
  AgentConfig cfg = tiny_config();
  cfg.entropy_temp = 0.0;
  SacAgent agent(kObs, kAct, cfg, 41);
  std::mt19937_64 rng(2);
  const Batch batch = random_batch(16, rng);
  const Matrix noise = Matrix::Zero(kAct, 16);
  const auto critic_before = agent.critics().online()[0].params;
  const double before = agent.actor_loss_and_grad(batch.states, noise).loss;
  auto lg = agent.actor_loss_and_grad(batch.states, noise);
  // A small plain gradient step must decrease -Q.
  auto step = [&](nn::ParamSet& p, const nn::ParamSet& g) {
    auto slots = slots_of(p);
    const auto gv = values_of(g);
    for (std::size_t i = 0; i < slots.size(); ++i) *slots[i] -= 1e-3 * gv[i];
  };
  step(agent.actor().trunk().params, lg.grads.trunk);
  step(agent.actor().mean_head().params, lg.grads.mean);
  const double after = agent.actor_loss_and_grad(batch.states, noise).loss;
  EXPECT_LT(after, before);
  EXPECT_TRUE(agent.critics().online()[0].params == critic_before);
}

TEST(ActorUpdate, LeavesCriticUntouchedAndRejectsEmptyBatch) {
  SacAgent agent(kObs, kAct, tiny_config(), 5);
  std::mt19937_64 rng(3);
  const Batch batch = random_batch(8, rng);
  const auto critic = agent.critics().online()[0].params;
  const auto mean_before = agent.actor().mean_head().params;
  agent.actor_update(batch);
  EXPECT_TRUE(agent.critics().online()[0].params == critic);
  EXPECT_FALSE(agent.actor().mean_head().params == mean_before);
  EXPECT_THROW(agent.actor_update(Batch{}), Error);
}

// ---------------------------------------------------------------------------
// DDPG

TEST(Ddpg, MatchesSacActorLossWithoutEntropyOrNoise) {
  AgentConfig cfg = tiny_config();
  cfg.entropy_temp = 0.0;
  SacAgent sac(kObs, kAct, cfg, 77);
  DdpgAgent ddpg(kObs, kAct, cfg, 77);  // same seed, same initial actor and critic
  std::mt19937_64 rng(4);
  const Batch batch = random_batch(9, rng);
  const double sac_loss = sac.actor_loss_and_grad(batch.states, Matrix::Zero(kAct, 9)).loss;
  const double ddpg_loss = ddpg.actor_loss_and_grad(batch.states).loss;
  EXPECT_NEAR(sac_loss, ddpg_loss, 1e-12);
}

TEST(Ddpg, NoiseFreeActionIsRepeatable) {
  AgentConfig cfg = tiny_config();
  cfg.explore_noise = 0.0;
  DdpgAgent agent(kObs, kAct, cfg, 1);
  const Vector obs = Vector::LinSpaced(kObs, 0.0, 1.0);
  EXPECT_EQ(agent.act(obs, true), agent.act(obs, true));
  EXPECT_EQ(agent.act(obs, false), agent.deterministic_action(obs));
}

TEST(Ddpg, ExplorationStaysInBox) {
  AgentConfig cfg = tiny_config();
  cfg.explore_noise = 2.0;
  DdpgAgent agent(kObs, kAct, cfg, 1);
  for (int i = 0; i < 100; ++i) EXPECT_LE(agent.act(Vector::Ones(kObs), true).cwiseAbs().maxCoeff(), 1.0);
}

TEST(Ddpg, UpdateMovesTargetsByTau) {
  DdpgAgent agent(kObs, kAct, tiny_config(), 6);
  std::mt19937_64 rng(3);
  const Batch batch = random_batch(8, rng);
  const auto target_before = agent.critics().targets()[0].params;
  agent.ddpg_update(batch);
  const double moved = std::sqrt(nn::difference(agent.critics().targets()[0].params, target_before).squared_norm());
  const double gap = std::sqrt(nn::difference(agent.critics().online()[0].params, target_before).squared_norm());
  EXPECT_NEAR(moved, 1e-3 * gap, 1e-12 * gap + 1e-15);
  EXPECT_THROW(agent.ddpg_update(Batch{}), Error);
}

// ---------------------------------------------------------------------------
// Checkpoints

TEST(Checkpoint, SacRoundTripAndDimensionCheck) {
  SacAgent agent(kObs, kAct, tiny_config(), 5);
  std::mt19937_64 rng(3);
  agent.update(random_batch(8, rng));
  std::stringstream ss;
  agent.save(ss);
  SacAgent loaded(kObs, kAct, tiny_config(), 99);
  loaded.load(ss);
  const Vector obs = Vector::LinSpaced(kObs, -1.0, 1.0);
  EXPECT_EQ(loaded.sample_action(obs, true).action, agent.sample_action(obs, true).action);
  EXPECT_TRUE(loaded.critics().targets()[0].params == agent.critics().targets()[0].params);

  std::stringstream again;
  agent.save(again);
  SacAgent wrong(kObs + 1, kAct, tiny_config(), 5);
  EXPECT_THROW(wrong.load(again), Error);
}

TEST(Checkpoint, DdpgRoundTrip) {
  DdpgAgent agent(kObs, kAct, tiny_config(), 5);
  std::stringstream ss;
  agent.save(ss);
  DdpgAgent loaded(kObs, kAct, tiny_config(), 6);
  loaded.load(ss);
  const Vector obs = Vector::LinSpaced(kObs, -1.0, 1.0);
  EXPECT_EQ(loaded.deterministic_action(obs), agent.deterministic_action(obs));
  std::stringstream sac_stream;
  SacAgent(kObs, kAct, tiny_config(), 5).save(sac_stream);
  EXPECT_THROW(loaded.load(sac_stream), Error);
}

// ---------------------------------------------------------------------------
// Training loop

EnvConfig tiny_env() {
  EnvConfig cfg;
  cfg.n_users = 1;
  cfg.n_antennas = 2;
  cfg.min_rates = {1.0};
  cfg.steps_per_episode = 10;
  return cfg;
}

TEST(Train, TrailingAverageWindow) {
  const std::vector<double> v{1, 2, 3, 4, 5, 6};
  const auto avg = trailing_average(v, 3);
  EXPECT_DOUBLE_EQ(avg[0], 1.0);
  EXPECT_DOUBLE_EQ(avg[1], 1.5);
  EXPECT_DOUBLE_EQ(avg[2], 2.0);
  EXPECT_DOUBLE_EQ(avg[5], 5.0);
  // Window 25 at episode e (0-based) averages max(0, e-24)..e.
  std::vector<double> w(40);
  for (int i = 0; i < 40; ++i) w[i] = i;
  const auto a25 = trailing_average(w, 25);
  EXPECT_DOUBLE_EQ(a25[30], (6.0 + 30.0) / 2.0);
  EXPECT_DOUBLE_EQ(a25[10], 5.0);
}

TEST(Train, SameSeedSameCurve) {
  const EnvConfig ecfg = tiny_env();
  auto run = [&] {
    Environment env(ecfg, 1);
    SacAgent agent(ecfg.observation_size(), ecfg.action_size(), tiny_config(), 2);
    TrainOptions opts;
    opts.episodes = 4;
    return train(agent, env, opts, 3).mean_reward;
  };
  const auto a = run();
  EXPECT_EQ(a.size(), 4u);
  EXPECT_EQ(a, run());
}

TEST(Train, ZeroLearningRatesFreezeParameters) {
  const EnvConfig ecfg = tiny_env();
  AgentConfig cfg = tiny_config();
  cfg.actor_learn_rate = 0.0;
  cfg.critic_learn_rate = 0.0;
  Environment env(ecfg, 1);
  SacAgent agent(ecfg.observation_size(), ecfg.action_size(), cfg, 2);
  const auto trunk = agent.actor().trunk().params;
  const auto mean = agent.actor().mean_head().params;
  const auto critic = agent.critics().online()[0].params;
  const auto target = agent.critics().targets()[0].params;
  TrainOptions opts;
  opts.episodes = 3;
  train(agent, env, opts, 3);
  EXPECT_TRUE(agent.actor().trunk().params == trunk);
  EXPECT_TRUE(agent.actor().mean_head().params == mean);
  EXPECT_TRUE(agent.critics().online()[0].params == critic);
  // Polyak toward an unchanged online copy of itself is a fixed point.
  EXPECT_TRUE(agent.critics().targets()[0].params == target);
}

TEST(Train, RejectsMismatchedAgent) {
  const EnvConfig ecfg = tiny_env();
  Environment env(ecfg, 1);
  SacAgent agent(ecfg.observation_size() + 1, ecfg.action_size(), tiny_config(), 2);
  EXPECT_THROW(train(agent, env, TrainOptions{}, 1), Error);
}

TEST(Train, DdpgRunsToCompletion) {
  const EnvConfig ecfg = tiny_env();
  Environment env(ecfg, 1);
  DdpgAgent agent(ecfg.observation_size(), ecfg.action_size(), tiny_config(), 2);
  TrainOptions opts;
  opts.episodes = 3;
  const auto curve = train(agent, env, opts, 1);
  EXPECT_EQ(curve.episodes(), 3u);
  EXPECT_EQ(curve.moving_avg.size(), 3u);
}

}  // namespace
}  // namespace mmwnoma
