#pragma once

#include <optional>
#include <random>
#include <vector>

#include "rltg/agent.hpp"
#include "rltg/reward.hpp"

namespace rltg {

/// A topic and the article it was taken from.
struct EpisodeItem {
  TokenSeq topic;
  TokenSeq article;
};

/// Builds episode items from tokenized articles using the first `k` tokens as the topic.
std::vector<EpisodeItem> prefix_episodes(const std::vector<TokenSeq>& articles, std::size_t k = 10);

struct TextEnvConfig {
  std::size_t topk = 10;
  std::size_t n_references = 10;  // source article plus n - 1 others drawn per episode
  RewardWeights weights;
};

/// Text-generation MDP. State: make_state of the LM after reading S_t. Action a appends the
/// a-th of the K most probable next tokens. Reward is scored on S_{t+1}.
class TextEnvironment : public Environment {
 public:
  TextEnvironment(const LmParams& lm, const Ae1Params& ae1, const Ae2Params& ae2, const ClassifierParams& adversary,
                  std::vector<EpisodeItem> items, TextEnvConfig config);

  StateVec reset(std::mt19937_64& rng) override;
  StepResult step(std::size_t action) override;
  Index num_actions() const override { return static_cast<Index>(config_.topk); }
  Index state_dim() const override { return ae1_->code_dim() + ae2_->code_dim(); }

  const TokenSeq& text() const { return text_; }
  const std::vector<TokenId>& candidates() const { return candidates_; }
  const std::vector<TokenSeq>& references() const { return references_; }
  const RewardBreakdown& last_reward() const { return last_; }
  std::size_t episode_item() const { return item_; }

 private:
  StateVec observe();

  const LmParams* lm_;
  const Ae1Params* ae1_;
  const Ae2Params* ae2_;
  const ClassifierParams* adversary_;
  std::vector<EpisodeItem> items_;
  TextEnvConfig config_;

  std::optional<LmCursor> cursor_;
  std::size_t item_ = 0;
  TokenSeq text_;
  nn::RowVectorF topic_embed_;
  std::vector<TokenId> candidates_;
  std::vector<TokenSeq> references_;
  RewardBreakdown last_;
  bool done_ = true;
};

struct AgentRun {
  AgentTrainResult result;
  std::size_t restart = 0;          // index of the kept restart
  std::vector<double> restart_scores;  // mean per-episode reward of each restart
};

/// Trains a DQN in a TextEnvironment. With restarts > 1 each restart re-initialises the DQN
/// from a fresh seed and the run with the highest mean episode reward is kept.
AgentRun train_agent(const AgentConfig& cfg, const LmParams& lm, const Ae1Params& ae1, const Ae2Params& ae2,
                     const ClassifierParams& adversary, const std::vector<EpisodeItem>& items,
                     const RewardWeights& weights, std::uint64_t seed, std::size_t restarts = 1,
                     std::size_t n_references = 10);

}  // namespace rltg
