#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "rltg/adversary.hpp"
#include "rltg/corpus.hpp"

namespace rltg {

struct RewardWeights {
  double alpha = 0.5;   // cosine similarity to the topic
  double beta = 0.5;    // BLEU overlap with the reference articles
  double lambda = 0.5;  // 1 - adversary confidence

  void validate() const;
};

/// Unweighted terms and their weighted sum.
struct RewardBreakdown {
  double cosine_term = 0.0;     // clamped to [0, 1]
  double bleu_term = 0.0;
  double adversary_term = 0.0;  // 1 - C_f
  double total = 0.0;
};

/// u.v / (|u| |v|), evaluated in double precision.
template <typename DerivedA, typename DerivedB>
double cosine_sim(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
  if (u.size() != v.size()) {
    throw DimensionError("cosine_sim: lengths " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
  const auto ud = u.template cast<double>().eval();
  const auto vd = v.template cast<double>().eval();
  const double nu = ud.norm();
  const double nv = vd.norm();
  if (nu == 0.0 || nv == 0.0) throw DomainError("cosine_sim: zero vector has no direction");
  const double c = ud.dot(vd) / (nu * nv);
  return std::clamp(c, -1.0, 1.0);
}

/// Sentence BLEU with 1- and 2-gram clipped precisions, add-one smoothing on both orders,
/// and brevity penalty min(1, exp(1 - r/c)) against the closest reference length.
double bleu_overlap(const TokenSeq& candidate, const std::vector<TokenSeq>& references);

std::size_t lcs_length(const std::vector<TokenId>& a, const std::vector<TokenId>& b);

/// Best LCS-based F1 against any reference.
double rouge_l(const TokenSeq& candidate, const std::vector<TokenSeq>& references);

RewardBreakdown combine_reward(const RewardWeights& weights, double cosine, double bleu, double fake_confidence);

RewardBreakdown step_reward(const RewardWeights& weights, const nn::RowVectorF& topic_embed,
                            const nn::RowVectorF& gen_embed, const TokenSeq& generated,
                            const std::vector<TokenSeq>& references, const ClassifierParams& adversary);

}  // namespace rltg
