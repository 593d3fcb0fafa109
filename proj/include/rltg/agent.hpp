#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "rltg/nn/adam.hpp"
#include "rltg/nn/weights_io.hpp"
#include "rltg/statecoder.hpp"

namespace rltg {

struct AgentConfig {
  std::size_t topk = 10;      // K, number of actions
  std::size_t horizon = 20;   // T, environment steps per episode
  double gamma = 0.9;
  std::size_t memory_cap = 10000;
  std::size_t batch = 32;
  double eps_max = 0.98;
  double eps_min = 0.02;
  double decay_rate = 5000.0;
  std::size_t sync_every = 200;  // environment steps between target syncs
  std::size_t episodes = 2000;
  std::vector<Index> hidden = {128, 64, 32};
  nn::AdamOptions adam{};

  void validate() const;
};

/// Policy network (theta) and target network (theta'), state -> K action values.
struct DqnParams {
  nn::Network<float> policy;
  nn::Network<float> target;

  Index state_dim() const { return policy.in_dim(); }
  Index num_actions() const { return policy.out_dim(); }
};

/// state_dim -> hidden... (relu) -> K (identity); the target starts as a copy of the policy.
DqnParams init_dqn(Index state_dim, Index num_actions, const std::vector<Index>& hidden, std::mt19937_64& rng);

nn::RowVectorF q_values(const DqnParams& dqn, const StateVec& s);
nn::RowVectorF target_q_values(const DqnParams& dqn, const StateVec& s);

/// eps_min + (eps_max - eps_min) * exp(-steps / decay_rate)
double epsilon_at(const AgentConfig& cfg, std::uint64_t steps);

/// Lowest index among the maxima.
std::size_t greedy_action(const nn::RowVectorF& q);

/// One uniform draw decides exploration; exploring draws a uniform action.
std::size_t select_action(const DqnParams& dqn, const StateVec& s, double eps, std::mt19937_64& rng);

struct Experience {
  StateVec state;
  std::size_t action = 0;
  StateVec next_state;
  double reward = 0.0;
  bool terminal = false;
};

/// FIFO-capped experience store.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  void push(Experience e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// 0 is the oldest retained experience.
  const Experience& at(std::size_t i) const { return items_.at(i); }
  /// Uniform sample without replacement.
  std::vector<const Experience*> sample(std::size_t batch, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Experience> items_;
};

using ExperienceBatch = std::vector<const Experience*>;

/// y = r + gamma * max_a' Q(s', a'; theta'), or y = r on terminal transitions.
std::vector<double> td_targets(const DqnParams& dqn, const ExperienceBatch& batch, double gamma);

/// Mean squared TD error over the batch and its gradient w.r.t. the policy parameters.
struct TdLoss {
  double loss = 0.0;
  nn::NetworkGradients<float> grads;
};
TdLoss td_loss(const DqnParams& dqn, const ExperienceBatch& batch, double gamma);

/// One Adam step on theta; theta' is untouched. Returns the pre-update loss.
double dqn_update(DqnParams& dqn, const ExperienceBatch& batch, double gamma, nn::AdamState<float>& optimizer);

nn::AdamState<float> make_dqn_optimizer(DqnParams& dqn, const nn::AdamOptions& options = {});

/// theta' := theta
void sync_target(DqnParams& dqn);

struct StepResult {
  StateVec next_state;
  double reward = 0.0;
  bool terminal = false;
  double inv_confidence = 1.0;  // 1 - C_f of the new text, for curve reporting
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual StateVec reset(std::mt19937_64& rng) = 0;
  virtual StepResult step(std::size_t action) = 0;
  virtual Index num_actions() const = 0;
  virtual Index state_dim() const = 0;
};

struct TrainTrace {
  std::vector<double> mean_reward;          // per episode
  std::vector<double> mean_inv_confidence;  // per episode
  std::size_t experiences = 0;
  std::size_t updates = 0;
  std::uint64_t steps = 0;
  std::size_t max_memory = 0;
};

struct AgentTrainResult {
  DqnParams dqn;
  TrainTrace trace;
};

/// Deep Q-learning with replay: per environment step pick an epsilon-greedy action, store the
/// transition, update on a uniform minibatch once the memory holds a batch, and copy theta into
/// theta' every sync_every steps. Episodes run at most cfg.horizon steps; the last is terminal.
AgentTrainResult run_dqn(const AgentConfig& cfg, Environment& env, DqnParams dqn, std::mt19937_64& rng);

void put_dqn(nn::TensorFile& file, const DqnParams& dqn);
DqnParams get_dqn(const nn::TensorFile& file);

}  // namespace rltg
