#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "rltg/corpus.hpp"
#include "rltg/nn/adam.hpp"
#include "rltg/nn/weights_io.hpp"

namespace rltg {

using nn::Index;

/// Reference language model: token embedding -> gated recurrent cell -> softmax projection.
/// The hidden state has the embedding size e.
struct LmParams {
  nn::MatrixF embedding;       // |V| x e
  nn::Layer<float> cell;       // recurrent, e -> e
  nn::Layer<float> projection; // dense, e -> |V|

  Index vocab_size() const { return embedding.rows(); }
  Index embed_dim() const { return embedding.cols(); }
  nn::ParamList<float> parameters();
  void validate() const;
};

LmParams init_lm(Index vocab_size, Index embed_dim, std::mt19937_64& rng);

struct LmOutput {
  nn::RowVectorF probs;   // length |V|
  nn::RowVectorF hidden;  // length e
};

/// Incremental evaluation. Starts after consuming BOS; every advance() consumes one token.
class LmCursor {
 public:
  explicit LmCursor(const LmParams& lm);

  void advance(TokenId token);
  void advance(const TokenSeq& seq);

  const nn::RowVectorF& hidden() const { return hidden_; }
  nn::RowVectorF probs() const;
  LmOutput output() const { return {probs(), hidden_}; }

  /// Mean of the hidden states after each consumed token (BOS excluded).
  nn::RowVectorF mean_hidden() const;
  std::size_t consumed() const { return consumed_; }

 private:
  const LmParams* lm_;
  nn::RowVectorF hidden_;
  nn::RowVectorF hidden_sum_;
  std::size_t consumed_ = 0;
};

/// Next-token distribution P and hidden state H after reading BOS + prefix.
LmOutput lm_next(const LmParams& lm, const TokenSeq& prefix);

/// Mean-pooled hidden state over the positions of `seq`.
nn::RowVectorF lm_embed(const LmParams& lm, const TokenSeq& seq);

/// Indices of the K largest probabilities, probability descending, ties by lower index.
template <typename Derived>
std::vector<TokenId> top_k(const Eigen::DenseBase<Derived>& probs, std::size_t k) {
  const auto n = static_cast<std::size_t>(probs.size());
  if (k < 1 || k > n) {
    throw DomainError("top_k: K=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<TokenId> idx(n);
  std::iota(idx.begin(), idx.end(), TokenId{0});
  const auto& p = probs.derived();
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), [&](TokenId a, TokenId b) {
    const auto pa = p(a);
    const auto pb = p(b);
    if (pa != pb) return pa > pb;
    return a < b;
  });
  idx.resize(k);
  return idx;
}

struct LmTrainOptions {
  std::size_t epochs = 10;
  nn::AdamOptions adam{};
  std::uint64_t seed = 0;
};

struct LmTrainResult {
  LmParams params;
  std::vector<double> loss_trace;  // mean next-token cross-entropy per epoch
};

/// Next-token cross-entropy training (targets: tokens then EOS), one Adam step per sequence.
LmTrainResult lm_train(const std::vector<TokenSeq>& corpus, LmParams params, const LmTrainOptions& options);

/// Floor applied to probabilities before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

struct PerplexityReport {
  double value = 0.0;
  std::size_t tokens = 0;
  std::size_t clamped = 0;  // tokens whose probability fell under the floor
};

/// exp(mean over tokens of -ln p(token | BOS + preceding tokens)).
PerplexityReport perplexity_report(const LmParams& lm, const std::vector<TokenSeq>& corpus);
double perplexity(const LmParams& lm, const std::vector<TokenSeq>& corpus);

inline constexpr const char* kLmPrefix = "lm.";
void put_lm(nn::TensorFile& file, const LmParams& lm);
LmParams get_lm(const nn::TensorFile& file);

}  // namespace rltg
