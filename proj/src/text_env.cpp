#include "rltg/text_env.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace rltg {

std::vector<EpisodeItem> prefix_episodes(const std::vector<TokenSeq>& articles, std::size_t k) {
  std::vector<EpisodeItem> out;
  for (const auto& a : articles) {
    if (a.size() <= k) continue;
    out.push_back({topic_of(a, k), a});
  }
  return out;
}

TextEnvironment::TextEnvironment(const LmParams& lm, const Ae1Params& ae1, const Ae2Params& ae2,
                                 const ClassifierParams& adversary, std::vector<EpisodeItem> items,
                                 TextEnvConfig config)
    : lm_(&lm), ae1_(&ae1), ae2_(&ae2), adversary_(&adversary), items_(std::move(items)), config_(config) {
  config_.weights.validate();
  if (items_.empty()) throw DataError("TextEnvironment: no episode items");
  if (config_.n_references < 1) throw ConfigError("TextEnvironment: need at least one reference");
  if (!ae1.trained) throw ConfigError("TextEnvironment: AE1 is untrained");
  if (!ae2.trained) throw ConfigError("TextEnvironment: AE2 is untrained");
  if (ae2.topk != static_cast<Index>(config_.topk)) {
    throw ConfigError("TextEnvironment: AE2 was trained for K=" + std::to_string(ae2.topk) + ", environment uses K=" +
                      std::to_string(config_.topk));
  }
  if (ae1.input_dim() != lm.embed_dim() || ae2.embed_dim() != lm.embed_dim()) {
    throw ConfigError("TextEnvironment: autoencoders do not match the LM width");
  }
  for (const auto& it : items_) {
    if (it.topic.empty()) throw DataError("TextEnvironment: empty topic");
  }
}

StateVec TextEnvironment::observe() {
  candidates_ = top_k(cursor_->probs(), config_.topk);
  return make_state(*ae1_, *ae2_, cursor_->hidden(), candidates_, lm_->embedding);
}

StateVec TextEnvironment::reset(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  item_ = pick(rng);
  const EpisodeItem& it = items_[item_];

  references_.clear();
  references_.push_back(it.article);
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < items_.size(); ++i)
    if (i != item_) others.push_back(i);
  const std::size_t extra = std::min(config_.n_references - 1, others.size());
  std::vector<std::size_t> chosen;
  std::sample(others.begin(), others.end(), std::back_inserter(chosen), extra, rng);
  for (std::size_t i : chosen) references_.push_back(items_[i].article);

  text_ = it.topic;
  text_.topic_len = it.topic.size();
  cursor_.emplace(*lm_);
  cursor_->advance(text_);
  topic_embed_ = cursor_->mean_hidden();
  done_ = false;
  return observe();
}

StepResult TextEnvironment::step(std::size_t action) {
  if (done_) throw UsageError("TextEnvironment::step called before reset or after a terminal step");
  if (action >= candidates_.size()) throw DomainError("TextEnvironment: action out of range");
  const TokenId token = candidates_[action];
  text_.tokens.push_back(token);
  cursor_->advance(token);
  last_ = step_reward(config_.weights, topic_embed_, cursor_->mean_hidden(), text_, references_, *adversary_);

  StepResult out;
  out.reward = last_.total;
  out.inv_confidence = last_.adversary_term;
  out.terminal = token == Vocabulary::eos;
  out.next_state = observe();
  done_ = out.terminal;
  return out;
}

AgentRun train_agent(const AgentConfig& cfg, const LmParams& lm, const Ae1Params& ae1, const Ae2Params& ae2,
                     const ClassifierParams& adversary, const std::vector<EpisodeItem>& items,
                     const RewardWeights& weights, std::uint64_t seed, std::size_t restarts,
                     std::size_t n_references) {
  cfg.validate();
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  TextEnvConfig env_cfg;
  env_cfg.topk = cfg.topk;
  env_cfg.weights = weights;
  env_cfg.n_references = n_references;
  TextEnvironment env(lm, ae1, ae2, adversary, items, env_cfg);

  AgentRun best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * r);
    DqnParams dqn = init_dqn(env.state_dim(), env.num_actions(), cfg.hidden, rng);
    AgentTrainResult result = run_dqn(cfg, env, std::move(dqn), rng);
    const auto& tr = result.trace.mean_reward;
    const double score = tr.empty() ? 0.0 : std::accumulate(tr.begin(), tr.end(), 0.0) / static_cast<double>(tr.size());
    best.restart_scores.push_back(score);
    if (score > best_score) {
      best_score = score;
      best.result = std::move(result);
      best.restart = r;
    }
  }
  return best;
}

}  // namespace rltg
