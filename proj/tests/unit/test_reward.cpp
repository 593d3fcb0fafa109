#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "rltg/reward.hpp"

using namespace rltg;

namespace {

TokenSeq seq(std::vector<TokenId> t) { return {std::move(t), 0}; }

nn::RowVectorF vec(std::initializer_list<float> v) {
  nn::RowVectorF out(static_cast<Index>(v.size()));
  Index i = 0;
  for (float x : v) out(i++) = x;
  return out;
}

std::vector<TokenId> random_tokens(std::mt19937_64& rng, std::size_t max_len, TokenId vocab) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<TokenId> tok(4, vocab - 1);
  std::vector<TokenId> out(len(rng));
  for (auto& t : out) t = tok(rng);
  return out;
}

ClassifierParams zero_head_adversary() {
  std::mt19937_64 rng(1);
  auto p = init_classifier(nn::xavier_uniform<float>(12, 4, 12, 4, rng), 3, rng);
  for (auto& w : p.output.weights) w.setZero();
  return p;
}

}  // namespace

TEST_CASE("cosine similarity closed forms") {
  CHECK(cosine_sim(vec({0.3f, -2.0f, 1.0f}), vec({0.3f, -2.0f, 1.0f})) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cosine_sim(vec({1, 0}), vec({0, 1})) == 0.0);
  CHECK(cosine_sim(vec({1, 0}), vec({1, 1})) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK_THROWS_AS(cosine_sim(vec({0, 0}), vec({1, 1})), DomainError);
  CHECK_THROWS_AS(cosine_sim(vec({1, 0}), vec({1, 1, 1})), DimensionError);
}

TEST_CASE("cosine similarity is scale invariant") {
  std::mt19937_64 rng(2);
  std::normal_distribution<float> d(0.0f, 1.0f);
  for (int trial = 0; trial < 100; ++trial) {
    nn::RowVectorF u(5), v(5);
    for (Index i = 0; i < 5; ++i) {
      u(i) = d(rng);
      v(i) = d(rng);
    }
    const double c = cosine_sim(u, v);
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
    CHECK(cosine_sim(nn::RowVectorF(u * 3.5f), v) == doctest::Approx(c).epsilon(1e-6));
  }
}

TEST_CASE("BLEU identities and oracle agreement") {
  CHECK(bleu_overlap(seq({4, 5, 6}), {seq({4, 5, 6})}) == doctest::Approx(1.0).epsilon(1e-12));
  const double floor_value = bleu_overlap(seq({4, 5, 6}), {seq({7, 8, 9})});
  CHECK(floor_value == doctest::Approx(oracle::bleu2({4, 5, 6}, {{7, 8, 9}})).epsilon(1e-12));
  // Hand evaluation: p1 = (0+1)/(3+1), p2 = (0+1)/(2+1), BP = 1.
  CHECK(floor_value == doctest::Approx(std::sqrt(0.25 / 3.0)).epsilon(1e-12));
  CHECK(bleu_overlap(seq({4, 5, 6}), {seq({4, 5, 7})}) == doctest::Approx(oracle::bleu2({4, 5, 6}, {{4, 5, 7}})).epsilon(1e-12));
  CHECK_THROWS_AS(bleu_overlap(seq({}), {seq({4})}), DomainError);
  CHECK_THROWS_AS(bleu_overlap(seq({4}), {}), DomainError);
}

TEST_CASE("ROUGE-L identities") {
  CHECK(rouge_l(seq({4, 5, 6}), {seq({4, 5, 6})}) == 1.0);
  CHECK(rouge_l(seq({4, 5}), {seq({6, 7})}) == 0.0);
  // "a c d" against "a b c d": LCS 3, P 1, R 0.75.
  CHECK(rouge_l(seq({4, 6, 7}), {seq({4, 5, 6, 7})}) == doctest::Approx(6.0 / 7.0).epsilon(1e-12));
  CHECK(lcs_length({4, 5, 6, 7}, {4, 6, 7}) == 3);
  CHECK(rouge_l(seq({4, 6, 7}), {seq({9}), seq({4, 5, 6, 7})}) == doctest::Approx(6.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("metrics match the oracles on random instances") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const auto cand = random_tokens(rng, 12, 10);
    std::vector<TokenSeq> refs;
    std::vector<oracle::Tokens> raw;
    const int n = 1 + trial % 3;
    for (int r = 0; r < n; ++r) {
      raw.push_back(random_tokens(rng, 14, 10));
      refs.push_back(seq(raw.back()));
    }
    CHECK(lcs_length(cand, raw[0]) == oracle::lcs(cand, raw[0]));
    CHECK(std::abs(rouge_l(seq(cand), refs) - oracle::rouge_l(cand, raw)) < 1e-9);
    CHECK(std::abs(bleu_overlap(seq(cand), refs) - oracle::bleu2(cand, raw)) < 1e-9);
    const double b = bleu_overlap(seq(cand), refs);
    CHECK(b >= 0.0);
    CHECK(b <= 1.0);
  }
}

TEST_CASE("BLEU and ROUGE-L are invariant to consistent index permutation") {
  std::mt19937_64 rng(4);
  std::vector<TokenId> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin() + 4, perm.end(), rng);
  const auto relabel = [&](const std::vector<TokenId>& t) {
    std::vector<TokenId> out;
    for (TokenId x : t) out.push_back(perm[x]);
    return seq(out);
  };
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_tokens(rng, 10, 10);
    const auto r1 = random_tokens(rng, 10, 10);
    const auto r2 = random_tokens(rng, 10, 10);
    CHECK(bleu_overlap(seq(c), {seq(r1), seq(r2)}) == bleu_overlap(relabel(c), {relabel(r1), relabel(r2)}));
    CHECK(rouge_l(seq(c), {seq(r1), seq(r2)}) == rouge_l(relabel(c), {relabel(r1), relabel(r2)}));
  }
}

TEST_CASE("combined reward terms") {
  const RewardWeights defaults;
  CHECK(combine_reward(defaults, 1.0, 1.0, 0.0).total == doctest::Approx(1.5));
  const RewardWeights no_adv{0.5, 0.5, 0.0};
  CHECK(combine_reward(no_adv, 0.6, 0.2, 0.9).total == doctest::Approx(0.5 * 0.6 + 0.5 * 0.2));
  const RewardWeights zero{0.0, 0.0, 0.0};
  CHECK(combine_reward(zero, 0.9, 0.8, 0.1).total == 0.0);
  const auto negative = combine_reward(defaults, -0.7, 0.0, 1.0);
  CHECK(negative.cosine_term == 0.0);
  CHECK(negative.total == 0.0);
  CHECK_THROWS_AS((RewardWeights{1.5, 0.5, 0.5}.validate()), ConfigError);
}

TEST_CASE("reward stays in range and falls with adversary confidence") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const RewardWeights w{u(rng), u(rng), u(rng)};
    const double cos = 2.0 * u(rng) - 1.0;
    const double bleu = u(rng);
    const double cf = u(rng);
    const auto r = combine_reward(w, cos, bleu, cf);
    CHECK(r.total >= 0.0);
    CHECK(r.total <= w.alpha + w.beta + w.lambda + 1e-12);
    CHECK(combine_reward(w, cos, bleu, std::min(1.0, cf + 0.1)).total <= r.total);
  }
}

TEST_CASE("step reward scores the generated text") {
  const auto adv = zero_head_adversary();
  const TokenSeq gen = seq({4, 5, 6});
  const auto r = step_reward(RewardWeights{}, vec({1, 0}), vec({1, 1}), gen, {seq({4, 5, 7})}, adv);
  CHECK(r.cosine_term == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(r.bleu_term == doctest::Approx(oracle::bleu2({4, 5, 6}, {{4, 5, 7}})).epsilon(1e-12));
  CHECK(r.adversary_term == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.total == doctest::Approx(0.5 * (r.cosine_term + r.bleu_term + r.adversary_term)).epsilon(1e-12));
  CHECK_THROWS_AS(step_reward(RewardWeights{}, vec({1, 0}), vec({1, 1}), seq({}), {gen}, adv), DomainError);
}
