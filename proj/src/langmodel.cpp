#include "rltg/langmodel.hpp"

#include <cmath>

namespace rltg {

nn::ParamList<float> LmParams::parameters() {
  nn::ParamList<float> out{{std::string(kLmPrefix) + "embedding", &embedding}};
  nn::append_params(cell, std::string(kLmPrefix) + "cell.", out);
  nn::append_params(projection, std::string(kLmPrefix) + "projection.", out);
  return out;
}

void LmParams::validate() const {
  if (embedding.rows() < 1 || embedding.cols() < 1) throw ConfigError("lm: empty embedding table");
  nn::check_layer_weights(cell);
  nn::check_layer_weights(projection);
  const Index e = embed_dim();
  if (cell.spec.kind != nn::LayerKind::recurrent || cell.spec.in_dim != e || cell.spec.out_dim != e) {
    throw ConfigError("lm: recurrent cell must map e -> e");
  }
  if (projection.spec.kind != nn::LayerKind::dense || projection.spec.in_dim != e ||
      projection.spec.out_dim != vocab_size()) {
    throw ConfigError("lm: projection must map e -> |V|");
  }
}

LmParams init_lm(Index vocab_size, Index embed_dim, std::mt19937_64& rng) {
  if (vocab_size < 1 || embed_dim < 1) throw ConfigError("init_lm: sizes must be >= 1");
  LmParams lm;
  lm.embedding = nn::xavier_uniform<float>(vocab_size, embed_dim, vocab_size, embed_dim, rng);
  lm.cell = nn::make_layer<float>(nn::recurrent_spec(embed_dim, embed_dim), rng);
  lm.projection = nn::make_layer<float>(nn::dense_spec(embed_dim, vocab_size), rng);
  return lm;
}

// ---------------------------------------------------------------------------

LmCursor::LmCursor(const LmParams& lm)
    : lm_(&lm),
      hidden_(nn::RowVectorF::Zero(lm.embed_dim())),
      hidden_sum_(nn::RowVectorF::Zero(lm.embed_dim())) {
  hidden_ = nn::gru_step<float>(lm.cell, lm.embedding.row(Vocabulary::bos), hidden_);
}

void LmCursor::advance(TokenId token) {
  if (token < 0 || token >= lm_->vocab_size()) {
    throw DataError("lm: token index " + std::to_string(token) + " outside vocabulary of size " +
                    std::to_string(lm_->vocab_size()));
  }
  hidden_ = nn::gru_step<float>(lm_->cell, lm_->embedding.row(token), hidden_);
  hidden_sum_ += hidden_;
  ++consumed_;
}

void LmCursor::advance(const TokenSeq& seq) {
  for (TokenId t : seq.tokens) advance(t);
}

nn::RowVectorF LmCursor::probs() const {
  nn::MatrixF logits = hidden_ * lm_->projection.weights[0] + lm_->projection.weights[1];
  return nn::softmax_rows(logits).row(0);
}

nn::RowVectorF LmCursor::mean_hidden() const {
  if (consumed_ == 0) throw DomainError("lm_embed: empty sequence");
  return hidden_sum_ / static_cast<float>(consumed_);
}

LmOutput lm_next(const LmParams& lm, const TokenSeq& prefix) {
  LmCursor cursor(lm);
  cursor.advance(prefix);
  return cursor.output();
}

nn::RowVectorF lm_embed(const LmParams& lm, const TokenSeq& seq) {
  if (seq.empty()) throw DomainError("lm_embed: empty sequence");
  LmCursor cursor(lm);
  cursor.advance(seq);
  return cursor.mean_hidden();
}

// ---------------------------------------------------------------------------

namespace {

void check_indices(const std::vector<TokenSeq>& corpus, Index vocab_size) {
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (TokenId t : corpus[i].tokens) {
      if (t < 0 || t >= vocab_size) {
        throw DataError("sequence " + std::to_string(i) + " contains token index " + std::to_string(t) +
                        " outside vocabulary of size " + std::to_string(vocab_size));
      }
    }
  }
}

struct SequenceLoss {
  double loss = 0.0;
  std::size_t tokens = 0;
};

/// Forward + backward for one sequence; gradients accumulated in `grads` (ordered as LmParams::parameters()).
SequenceLoss sequence_step(const LmParams& lm, const TokenSeq& seq, nn::GradList<float>& grads) {
  const Index steps = static_cast<Index>(seq.size()) + 1;
  const Index e = lm.embed_dim();
  nn::MatrixF inputs(steps, e);
  inputs.row(0) = lm.embedding.row(Vocabulary::bos);
  for (Index t = 1; t < steps; ++t) inputs.row(t) = lm.embedding.row(seq.tokens[static_cast<std::size_t>(t - 1)]);

  nn::GruCache<float> gru_cache;
  const nn::MatrixF hiddens = nn::gru_forward(lm.cell, inputs, &gru_cache);
  nn::DenseCache<float> proj_cache;
  const nn::MatrixF logits = nn::dense_forward(lm.projection, hiddens, &proj_cache);
  nn::MatrixF dlogits = nn::softmax_rows(logits);

  SequenceLoss out;
  out.tokens = static_cast<std::size_t>(steps);
  const float scale = 1.0f / static_cast<float>(steps);
  for (Index t = 0; t < steps; ++t) {
    const TokenId target = t + 1 < steps ? seq.tokens[static_cast<std::size_t>(t)] : Vocabulary::eos;
    out.loss -= std::log(std::max(static_cast<double>(dlogits(t, target)), kProbabilityFloor));
    dlogits(t, target) -= 1.0f;
  }
  dlogits *= scale;

  std::vector<nn::MatrixF> cell_grads(grads.begin() + 1, grads.begin() + 5);
  std::vector<nn::MatrixF> proj_grads(grads.begin() + 5, grads.begin() + 7);
  const nn::MatrixF dh = nn::dense_backward(lm.projection, proj_cache, dlogits, proj_grads);
  const nn::MatrixF dx = nn::gru_backward(lm.cell, gru_cache, dh, cell_grads);
  grads[0].row(Vocabulary::bos) += dx.row(0);
  for (Index t = 1; t < steps; ++t) grads[0].row(seq.tokens[static_cast<std::size_t>(t - 1)]) += dx.row(t);
  std::copy(cell_grads.begin(), cell_grads.end(), grads.begin() + 1);
  std::copy(proj_grads.begin(), proj_grads.end(), grads.begin() + 5);
  return out;
}

}  // namespace

LmTrainResult lm_train(const std::vector<TokenSeq>& corpus, LmParams params, const LmTrainOptions& options) {
  if (corpus.empty()) throw DomainError("lm_train: empty corpus");
  if (options.epochs < 1) throw DomainError("lm_train: epochs must be >= 1");
  params.validate();
  check_indices(corpus, params.vocab_size());

  LmTrainResult result;
  auto refs = params.parameters();
  auto adam = nn::make_adam(refs, options.adam);
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t tokens = 0;
    for (std::size_t i : order) {
      auto grads = nn::zeros_like(refs);
      const auto step = sequence_step(params, corpus[i], grads);
      if (!std::isfinite(step.loss)) throw TrainingError("lm_train: non-finite loss in epoch " + std::to_string(epoch));
      total += step.loss;
      tokens += step.tokens;
      nn::adam_step(adam, refs, grads);
    }
    result.loss_trace.push_back(total / static_cast<double>(tokens));
  }
  result.params = std::move(params);
  return result;
}

PerplexityReport perplexity_report(const LmParams& lm, const std::vector<TokenSeq>& corpus) {
  if (corpus.empty()) throw DomainError("perplexity: empty corpus");
  PerplexityReport report;
  double nll = 0.0;
  for (const auto& seq : corpus) {
    LmCursor cursor(lm);
    for (TokenId t : seq.tokens) {
      const double p = static_cast<double>(cursor.probs()(t));
      if (p < kProbabilityFloor) ++report.clamped;
      nll -= std::log(std::max(p, kProbabilityFloor));
      ++report.tokens;
      cursor.advance(t);
    }
  }
  if (report.tokens == 0) throw DomainError("perplexity: corpus has no tokens");
  report.value = std::exp(nll / static_cast<double>(report.tokens));
  return report;
}

double perplexity(const LmParams& lm, const std::vector<TokenSeq>& corpus) { return perplexity_report(lm, corpus).value; }

void put_lm(nn::TensorFile& file, const LmParams& lm) {
  file.tensors[std::string(kLmPrefix) + "embedding"] = lm.embedding;
  nn::put_layer(file, std::string(kLmPrefix) + "cell.", lm.cell);
  nn::put_layer(file, std::string(kLmPrefix) + "projection.", lm.projection);
}

LmParams get_lm(const nn::TensorFile& file) {
  LmParams lm;
  lm.embedding = file.at(std::string(kLmPrefix) + "embedding");
  lm.cell = nn::get_layer(file, std::string(kLmPrefix) + "cell.");
  lm.projection = nn::get_layer(file, std::string(kLmPrefix) + "projection.");
  lm.validate();
  return lm;
}

}  // namespace rltg
