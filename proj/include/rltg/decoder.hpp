#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rltg/agent.hpp"
#include "rltg/reward.hpp"

namespace rltg {

/// Topic followed by the produced continuation (EOS is not emitted).
struct Generation {
  TokenSeq text;
  std::vector<std::size_t> actions;                  // chosen top-K slot per step (RL only)
  std::vector<std::vector<TokenId>> candidates;      // top-K list offered at each step (RL only)

  std::vector<TokenId> continuation() const;
};

/// Greedy policy decoding: at each step append the top-K candidate with the largest Q value.
Generation generate_rl(const DqnParams& dqn, const LmParams& lm, const Ae1Params& ae1, const Ae2Params& ae2,
                       const TokenSeq& topic, std::size_t horizon);

/// argmax of the LM's next-token distribution each step.
Generation generate_greedy(const LmParams& lm, const TokenSeq& topic, std::size_t horizon);

/// Samples from the LM distribution renormalised over its K most probable tokens.
Generation generate_topk_sample(const LmParams& lm, const TokenSeq& topic, std::size_t horizon, std::size_t k,
                                std::mt19937_64& rng);

struct RepetitionCycle {
  std::size_t start = 0;   // index in the sequence where the periodic tail begins
  std::size_t period = 0;
};

/// Smallest period p such that the tail of `tokens` repeats a length-p block at least
/// `min_repeats` times; the tail is extended back as far as the period holds.
std::optional<RepetitionCycle> find_repetition_cycle(const std::vector<TokenId>& tokens, std::size_t min_repeats = 3);

struct Method {
  std::string name;
  /// Called with the topic and its index into the evaluation list.
  std::function<Generation(const TokenSeq& topic, std::size_t index)> generate;
};

struct MethodScore {
  std::string name;
  double similarity = 0.0;
  double perplexity = 0.0;
  double rouge_l = 0.0;
  bool failed = false;
  std::string error;
};

struct EvalReport {
  std::vector<MethodScore> rows;
  std::size_t topics = 0;
  std::size_t horizon = 0;
};

/// Scores each method on each topic and averages: similarity is the cosine between the LM
/// embeddings of topic and generated text, perplexity is the LM's on the generated text, and
/// ROUGE-L is against the topic's source article. A method that throws is marked failed.
EvalReport evaluate_suite(const std::vector<Method>& methods, const LmParams& lm,
                          const std::vector<TokenSeq>& topics, const std::vector<TokenSeq>& sources);

void write_report_csv(const std::string& path, const EvalReport& report);
std::string format_report_table(const EvalReport& report);

struct Curves {
  std::vector<double> mean_reward;
  std::vector<double> mean_inv_confidence;
};

/// CSV with columns episode,mean_reward,mean_inv_confidence at full double precision.
void export_curves(const std::string& path, const TrainTrace& trace);
Curves read_curves(const std::string& path);

}  // namespace rltg
