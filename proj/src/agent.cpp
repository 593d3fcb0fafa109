#include "rltg/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rltg {

using nn::MatrixF;
using nn::RowVectorF;

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(eps_min >= 0.0 && eps_min <= eps_max && eps_max <= 1.0)) {
    throw ConfigError("epsilon bounds must satisfy 0 <= eps_min <= eps_max <= 1");
  }
  if (!(decay_rate > 0.0)) throw ConfigError("decay_rate must be positive");
  if (batch < 1 || batch > memory_cap) throw ConfigError("batch must satisfy 1 <= batch <= memory_cap");
  if (topk < 2) throw ConfigError("K must be >= 2");
  if (horizon < 1) throw ConfigError("T must be >= 1");
  if (sync_every < 1) throw ConfigError("sync_every must be >= 1");
  if (hidden.empty()) throw ConfigError("DQN needs at least one hidden layer");
}

DqnParams init_dqn(Index state_dim, Index num_actions, const std::vector<Index>& hidden, std::mt19937_64& rng) {
  std::vector<nn::LayerSpec> specs;
  Index in = state_dim;
  for (Index h : hidden) {
    specs.push_back(nn::dense_spec(in, h, nn::Activation::relu));
    in = h;
  }
  specs.push_back(nn::dense_spec(in, num_actions));
  DqnParams dqn;
  dqn.policy = nn::make_network<float>(specs, rng);
  dqn.target = dqn.policy;
  return dqn;
}

namespace {

RowVectorF evaluate(const nn::Network<float>& net, const StateVec& s) {
  if (s.size() != net.in_dim()) {
    throw ConfigError("q_values: state has length " + std::to_string(s.size()) + ", DQN expects " +
                      std::to_string(net.in_dim()));
  }
  return nn::predict(net, MatrixF(s)).row(0);
}

MatrixF stack(const ExperienceBatch& batch, bool next) {
  const Index dim = batch.front()->state.size();
  MatrixF m(static_cast<Index>(batch.size()), dim);
  for (std::size_t i = 0; i < batch.size(); ++i) m.row(static_cast<Index>(i)) = next ? batch[i]->next_state : batch[i]->state;
  return m;
}

}  // namespace

RowVectorF q_values(const DqnParams& dqn, const StateVec& s) { return evaluate(dqn.policy, s); }
RowVectorF target_q_values(const DqnParams& dqn, const StateVec& s) { return evaluate(dqn.target, s); }

double epsilon_at(const AgentConfig& cfg, std::uint64_t steps) {
  return cfg.eps_min + (cfg.eps_max - cfg.eps_min) * std::exp(-static_cast<double>(steps) / cfg.decay_rate);
}

std::size_t greedy_action(const RowVectorF& q) {
  Index best = 0;
  for (Index i = 1; i < q.size(); ++i)
    if (q(i) > q(best)) best = i;
  return static_cast<std::size_t>(best);
}

std::size_t select_action(const DqnParams& dqn, const StateVec& s, double eps, std::mt19937_64& rng) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw DomainError("select_action: eps must lie in [0, 1]");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < eps) {
    std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(dqn.num_actions()) - 1);
    return pick(rng);
  }
  return greedy_action(q_values(dqn, s));
}

// ---------------------------------------------------------------------------

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity < 1) throw ConfigError("replay memory capacity must be >= 1");
}

void ReplayMemory::push(Experience e) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(e));
}

std::vector<const Experience*> ReplayMemory::sample(std::size_t batch, std::mt19937_64& rng) const {
  if (batch > items_.size()) throw DomainError("replay sample larger than memory");
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `batch` slots become a uniform sample without replacement.
  for (std::size_t i = 0; i < batch; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<const Experience*> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) out.push_back(&items_[idx[i]]);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> td_targets(const DqnParams& dqn, const ExperienceBatch& batch, double gamma) {
  if (batch.empty()) throw DomainError("td_targets: empty batch");
  const MatrixF next_q = nn::predict(dqn.target, stack(batch, true));
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    y[i] = batch[i]->reward;
    if (!batch[i]->terminal) y[i] += gamma * static_cast<double>(next_q.row(static_cast<Index>(i)).maxCoeff());
  }
  return y;
}

TdLoss td_loss(const DqnParams& dqn, const ExperienceBatch& batch, double gamma) {
  const std::vector<double> y = td_targets(dqn, batch, gamma);
  auto fwd = nn::forward(dqn.policy, stack(batch, false));
  MatrixF dq = MatrixF::Zero(fwd.output.rows(), fwd.output.cols());
  const double n = static_cast<double>(batch.size());
  TdLoss out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto a = static_cast<Index>(batch[i]->action);
    if (a >= fwd.output.cols()) throw DataError("experience action outside the DQN's action range");
    const double err = static_cast<double>(fwd.output(static_cast<Index>(i), a)) - y[i];
    out.loss += err * err / n;
    dq(static_cast<Index>(i), a) = static_cast<float>(2.0 * err / n);
  }
  if (!std::isfinite(out.loss)) throw TrainingError("dqn_update: non-finite TD loss");
  out.grads = nn::backward(dqn.policy, fwd.cache, dq);
  return out;
}

nn::AdamState<float> make_dqn_optimizer(DqnParams& dqn, const nn::AdamOptions& options) {
  return nn::make_adam(nn::parameters(dqn.policy, "dqn.policy."), options);
}

double dqn_update(DqnParams& dqn, const ExperienceBatch& batch, double gamma, nn::AdamState<float>& optimizer) {
  TdLoss td = td_loss(dqn, batch, gamma);
  nn::adam_step(optimizer, dqn.policy, td.grads, "dqn.policy.");
  return td.loss;
}

void sync_target(DqnParams& dqn) {
  dqn.target = dqn.policy;
  dqn.target.revision = 0;
}

// ---------------------------------------------------------------------------

AgentTrainResult run_dqn(const AgentConfig& cfg, Environment& env, DqnParams dqn, std::mt19937_64& rng) {
  cfg.validate();
  if (dqn.state_dim() != env.state_dim() || dqn.num_actions() != env.num_actions()) {
    throw ConfigError("run_dqn: DQN shape does not match the environment");
  }
  ReplayMemory memory(cfg.memory_cap);
  auto optimizer = make_dqn_optimizer(dqn, cfg.adam);
  TrainTrace trace;
  for (std::size_t episode = 0; episode < cfg.episodes; ++episode) {
    StateVec s = env.reset(rng);
    double reward_sum = 0.0;
    double inv_conf_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
      const std::size_t a = select_action(dqn, s, epsilon_at(cfg, trace.steps), rng);
      StepResult out;
      try {
        out = env.step(a);
      } catch (const Error& e) {
        throw TrainingError("episode " + std::to_string(episode) + ", step " + std::to_string(t) + ": " + e.what());
      }
      const bool terminal = out.terminal || t + 1 == cfg.horizon;
      reward_sum += out.reward;
      inv_conf_sum += out.inv_confidence;
      ++steps;
      memory.push({s, a, out.next_state, out.reward, terminal});
      ++trace.experiences;
      trace.max_memory = std::max(trace.max_memory, memory.size());
      if (memory.size() >= cfg.batch) {
        dqn_update(dqn, memory.sample(cfg.batch, rng), cfg.gamma, optimizer);
        ++trace.updates;
      }
      ++trace.steps;
      if (trace.steps % cfg.sync_every == 0) sync_target(dqn);
      s = std::move(out.next_state);
      if (terminal) break;
    }
    trace.mean_reward.push_back(reward_sum / static_cast<double>(steps));
    trace.mean_inv_confidence.push_back(inv_conf_sum / static_cast<double>(steps));
  }
  return {std::move(dqn), std::move(trace)};
}

void put_dqn(nn::TensorFile& file, const DqnParams& dqn) {
  nn::put_network(file, "dqn.policy.", dqn.policy);
  nn::put_network(file, "dqn.target.", dqn.target);
}

DqnParams get_dqn(const nn::TensorFile& file) {
  DqnParams dqn;
  dqn.policy = nn::get_network(file, "dqn.policy.");
  dqn.target = nn::get_network(file, "dqn.target.");
  return dqn;
}

}  // namespace rltg
