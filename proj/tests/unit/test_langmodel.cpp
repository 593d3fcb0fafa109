#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "rltg/langmodel.hpp"

using namespace rltg;

namespace {

const std::string corpus_path = std::string(RLTG_DATA_DIR) + "/fixture_corpus.jsonl";

struct TrainedFixture {
  Vocabulary vocab;
  std::vector<TokenSeq> seqs;
  LmParams lm;
};

const TrainedFixture& trained_fixture() {
  static const TrainedFixture fx = [] {
    TrainedFixture f;
    const auto items = load_corpus_strict(corpus_path);
    f.vocab = build_vocab(items, 2);
    for (const auto& item : items) f.seqs.push_back(tokenize(item.text, f.vocab));
    std::mt19937_64 rng(11);
    f.lm = lm_train(f.seqs, init_lm(static_cast<Index>(f.vocab.size()), 32, rng), {.epochs = 3, .seed = 11}).params;
    return f;
  }();
  return fx;
}

// Projection weights and bias zeroed -> equal logits for every token.
LmParams uniform_lm(Index vocab, Index e) {
  std::mt19937_64 rng(0);
  LmParams lm = init_lm(vocab, e, rng);
  for (auto& w : lm.projection.weights) w.setZero();
  return lm;
}

}  // namespace

TEST_CASE("next-token distribution is normalised and shaped") {
  std::mt19937_64 rng(1);
  const LmParams lm = init_lm(12, 8, rng);
  const TokenSeq prefix{{4, 7, 9, 5}, 0};
  const auto out = lm_next(lm, prefix);
  CHECK(out.probs.size() == 12);
  CHECK(out.hidden.size() == 8);
  CHECK(out.probs.cast<double>().sum() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK((out.probs.array() >= 0.0f).all());
}

TEST_CASE("equal logits give a uniform distribution and perplexity |V|") {
  const LmParams lm = uniform_lm(10, 6);
  const auto p = lm_next(lm, TokenSeq{{4, 5}, 0}).probs;
  for (Index i = 0; i < p.size(); ++i) CHECK(p(i) == doctest::Approx(0.1).epsilon(1e-6));
  const std::vector<TokenSeq> corpus{{{4, 5, 6}, 0}, {{7, 8}, 0}};
  CHECK(perplexity(lm, corpus) == doctest::Approx(10.0).epsilon(1e-3));
}

TEST_CASE("a model that is certain of every observed token has perplexity 1") {
  // Vocabulary of specials plus one word: the bias makes that word's probability 1 in float.
  LmParams lm = uniform_lm(5, 4);
  lm.projection.weights[1](0, 4) = 200.0f;
  CHECK(perplexity(lm, {{{4, 4, 4}, 0}}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(perplexity_report(lm, {{{1}, 0}}).clamped == 1);
  CHECK_THROWS_AS(perplexity(lm, {}), DomainError);
}

TEST_CASE("cursor agrees with whole-prefix evaluation") {
  std::mt19937_64 rng(2);
  const LmParams lm = init_lm(9, 5, rng);
  const TokenSeq seq{{4, 6, 8, 5, 7}, 0};
  LmCursor cursor(lm);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const TokenSeq prefix{{seq.tokens.begin(), seq.tokens.begin() + static_cast<std::ptrdiff_t>(t)}, 0};
    CHECK(cursor.probs() == lm_next(lm, prefix).probs);
    cursor.advance(seq.tokens[t]);
  }
  CHECK(cursor.consumed() == seq.size());
  CHECK(cursor.mean_hidden() == lm_embed(lm, seq));
}

TEST_CASE("lm_embed of one token is that step's hidden state") {
  std::mt19937_64 rng(3);
  const LmParams lm = init_lm(9, 5, rng);
  const TokenSeq one{{6}, 0};
  LmCursor cursor(lm);
  cursor.advance(6);
  CHECK(lm_embed(lm, one) == cursor.hidden());
  CHECK(lm_embed(lm, TokenSeq{{4, 5, 6}, 0}) == lm_embed(lm, TokenSeq{{4, 5, 6}, 0}));
  CHECK_THROWS_AS(lm_embed(lm, TokenSeq{}), DomainError);
}

TEST_CASE("top_k ordering and tie rule") {
  nn::RowVectorF p(3);
  p << 0.1f, 0.5f, 0.4f;
  CHECK(top_k(p, 2) == std::vector<TokenId>{1, 2});
  nn::RowVectorF flat = nn::RowVectorF::Constant(5, 0.2f);
  CHECK(top_k(flat, 3) == std::vector<TokenId>{0, 1, 2});
  CHECK_THROWS_AS(top_k(p, 0), DomainError);
  CHECK_THROWS_AS(top_k(p, 4), DomainError);
}

TEST_CASE("top_k with K = |V| is a full descending sort") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int trial = 0; trial < 20; ++trial) {
    nn::RowVectorF p(17);
    for (Index i = 0; i < p.size(); ++i) p(i) = u(rng);
    std::vector<TokenId> oracle(17);
    std::iota(oracle.begin(), oracle.end(), 0);
    std::stable_sort(oracle.begin(), oracle.end(), [&](TokenId a, TokenId b) { return p(a) > p(b); });
    CHECK(top_k(p, 17) == oracle);
  }
}

TEST_CASE("training on a repeated bigram learns the successor") {
  // Tokens: a = 4, b = 5.
  TokenSeq seq;
  for (int i = 0; i < 10; ++i) seq.tokens.insert(seq.tokens.end(), {4, 5});
  const std::vector<TokenSeq> corpus(8, seq);
  std::vector<oracle::Tokens> raw(corpus.size(), seq.tokens);
  const auto expected = oracle::bigram_argmax(raw, 4, Vocabulary::eos);
  REQUIRE(expected == 5);

  std::mt19937_64 rng(5);
  const auto result = lm_train(corpus, init_lm(6, 8, rng), {.epochs = 30, .seed = 5});
  CHECK(result.loss_trace.size() == 30);
  for (double l : result.loss_trace) CHECK(std::isfinite(l));
  CHECK(top_k(lm_next(result.params, TokenSeq{{4}, 0}).probs, 1)[0] == expected);
  CHECK(top_k(lm_next(result.params, TokenSeq{{4, 5, 4}, 0}).probs, 1)[0] == expected);
}

TEST_CASE("one epoch on a tiny corpus completes") {
  std::mt19937_64 rng(6);
  const auto result = lm_train({{{4, 5, 6}, 0}}, init_lm(7, 4, rng), {.epochs = 1});
  REQUIRE(result.loss_trace.size() == 1);
  CHECK(std::isfinite(result.loss_trace[0]));
  CHECK_THROWS_AS(lm_train({{{4, 99}, 0}}, init_lm(7, 4, rng), {.epochs = 1}), DataError);
}

TEST_CASE("trained fixture LM perplexity matches an independent log-sum") {
  const auto& fx = trained_fixture();
  std::vector<double> probs;
  for (const auto& seq : fx.seqs) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const TokenSeq prefix{{seq.tokens.begin(), seq.tokens.begin() + static_cast<std::ptrdiff_t>(t)}, 0};
      probs.push_back(static_cast<double>(lm_next(fx.lm, prefix).probs(seq.tokens[t])));
    }
    if (probs.size() > 3000) break;
  }
  std::vector<TokenSeq> scored;
  std::size_t n = 0;
  for (const auto& seq : fx.seqs) {
    scored.push_back(seq);
    n += seq.size();
    if (n >= probs.size()) break;
  }
  REQUIRE(n == probs.size());
  const double oracle_ppl = oracle::perplexity_from_probs(probs, kProbabilityFloor);
  CHECK(std::abs(perplexity(fx.lm, scored) - oracle_ppl) <= 1e-6 * oracle_ppl);
}

TEST_CASE("trained fixture LM is order sensitive") {
  const auto& fx = trained_fixture();
  const auto a = fx.vocab.index_of("the");
  const auto b = fx.vocab.index_of("officials");
  REQUIRE(a != Vocabulary::unk);
  REQUIRE(b != Vocabulary::unk);
  CHECK(lm_embed(fx.lm, TokenSeq{{a, b}, 0}) != lm_embed(fx.lm, TokenSeq{{b, a}, 0}));
}

TEST_CASE("LM weights round trip") {
  std::mt19937_64 rng(7);
  const LmParams lm = init_lm(9, 5, rng);
  nn::TensorFile file;
  put_lm(file, lm);
  const LmParams back = get_lm(nn::decode_tensor_file(nn::encode_tensor_file(file)));
  CHECK(back.embedding == lm.embedding);
  const TokenSeq seq{{4, 5, 6}, 0};
  CHECK(lm_next(back, seq).probs == lm_next(lm, seq).probs);
}
