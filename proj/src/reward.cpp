#include "rltg/reward.hpp"

#include <algorithm>
#include <map>
#include <utility>

namespace rltg {

namespace {

using Bigram = std::pair<TokenId, TokenId>;

void require_nonempty(const TokenSeq& candidate, const std::vector<TokenSeq>& references, const char* what) {
  if (candidate.empty()) throw DomainError(std::string(what) + ": empty candidate");
  if (references.empty()) throw DomainError(std::string(what) + ": no references");
}

template <typename Key, typename Extract>
std::map<Key, std::size_t> count_grams(const std::vector<TokenId>& tokens, std::size_t n, Extract extract) {
  std::map<Key, std::size_t> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[extract(tokens, i)];
  return counts;
}

template <typename Key, typename Extract>
std::pair<std::size_t, std::size_t> clipped_matches(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
                                                    std::size_t n, Extract extract) {
  const auto cand = count_grams<Key>(candidate.tokens, n, extract);
  std::map<Key, std::size_t> max_ref;
  for (const auto& ref : references) {
    for (const auto& [gram, c] : count_grams<Key>(ref.tokens, n, extract)) {
      auto& m = max_ref[gram];
      m = std::max(m, c);
    }
  }
  std::size_t matched = 0;
  std::size_t total = 0;
  for (const auto& [gram, c] : cand) {
    total += c;
    auto it = max_ref.find(gram);
    if (it != max_ref.end()) matched += std::min(c, it->second);
  }
  return {matched, total};
}

}  // namespace

void RewardWeights::validate() const {
  for (double w : {alpha, beta, lambda}) {
    if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("reward weights must lie in [0, 1]");
  }
}

double bleu_overlap(const TokenSeq& candidate, const std::vector<TokenSeq>& references) {
  require_nonempty(candidate, references, "bleu_overlap");
  const auto unigram = [](const std::vector<TokenId>& t, std::size_t i) { return t[i]; };
  const auto bigram = [](const std::vector<TokenId>& t, std::size_t i) { return Bigram{t[i], t[i + 1]}; };
  const auto [m1, t1] = clipped_matches<TokenId>(candidate, references, 1, unigram);
  const auto [m2, t2] = clipped_matches<Bigram>(candidate, references, 2, bigram);
  const double p1 = (static_cast<double>(m1) + 1.0) / (static_cast<double>(t1) + 1.0);
  const double p2 = (static_cast<double>(m2) + 1.0) / (static_cast<double>(t2) + 1.0);

  const double c = static_cast<double>(candidate.size());
  std::size_t closest = references.front().size();
  for (const auto& ref : references) {
    const auto d = [&](std::size_t len) { return std::abs(static_cast<double>(len) - c); };
    if (d(ref.size()) < d(closest) || (d(ref.size()) == d(closest) && ref.size() < closest)) closest = ref.size();
  }
  const double bp = std::min(1.0, std::exp(1.0 - static_cast<double>(closest) / c));
  return bp * std::exp(0.5 * (std::log(p1) + std::log(p2)));
}

std::size_t lcs_length(const std::vector<TokenId>& a, const std::vector<TokenId>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const TokenSeq& candidate, const std::vector<TokenSeq>& references) {
  require_nonempty(candidate, references, "rouge_l");
  double best = 0.0;
  for (const auto& ref : references) {
    if (ref.empty()) continue;
    const auto lcs = static_cast<double>(lcs_length(candidate.tokens, ref.tokens));
    if (lcs == 0.0) continue;
    const double p = lcs / static_cast<double>(candidate.size());
    const double r = lcs / static_cast<double>(ref.size());
    best = std::max(best, 2.0 * p * r / (p + r));
  }
  return best;
}

RewardBreakdown combine_reward(const RewardWeights& weights, double cosine, double bleu, double fake_confidence) {
  RewardBreakdown r;
  r.cosine_term = std::clamp(cosine, 0.0, 1.0);
  r.bleu_term = std::clamp(bleu, 0.0, 1.0);
  r.adversary_term = 1.0 - std::clamp(fake_confidence, 0.0, 1.0);
  r.total = weights.alpha * r.cosine_term + weights.beta * r.bleu_term + weights.lambda * r.adversary_term;
  return r;
}

RewardBreakdown step_reward(const RewardWeights& weights, const nn::RowVectorF& topic_embed,
                            const nn::RowVectorF& gen_embed, const TokenSeq& generated,
                            const std::vector<TokenSeq>& references, const ClassifierParams& adversary) {
  if (generated.empty()) throw DomainError("step_reward: empty generated text");
  const double cos = cosine_sim(topic_embed, gen_embed);
  const double bleu = bleu_overlap(generated, references);
  const double cf = confidence(adversary, generated);
  return combine_reward(weights, cos, bleu, cf);
}

}  // namespace rltg
