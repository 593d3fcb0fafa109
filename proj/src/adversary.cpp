#include "rltg/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rltg {

using nn::MatrixF;
using nn::RowVectorF;

namespace {

const std::string kPrefix = kAdversaryPrefix;

TokenSeq strip_padding(const TokenSeq& seq) {
  TokenSeq out = seq;
  while (!out.tokens.empty() && out.tokens.back() == Vocabulary::pad) out.tokens.pop_back();
  return out;
}

MatrixF reversed_rows(const MatrixF& m) { return m.colwise().reverse(); }

struct Pass {
  MatrixF inputs;
  nn::GruCache<float> fwd, bwd;
  nn::AttentionCache<float> attention;
  nn::DenseCache<float> hidden, output;
  double probability = 0.0;
};

double run(const ClassifierParams& p, const TokenSeq& raw, Pass* pass) {
  const TokenSeq seq = strip_padding(raw);
  if (seq.empty()) throw DomainError("confidence: empty sequence");
  const Index steps = static_cast<Index>(seq.size());
  MatrixF x(steps, p.embedding.cols());
  for (Index t = 0; t < steps; ++t) {
    const TokenId id = seq.tokens[static_cast<std::size_t>(t)];
    if (id < 0 || id >= p.embedding.rows()) throw DataError("confidence: token index outside vocabulary");
    x.row(t) = p.embedding.row(id);
  }
  const MatrixF hf = nn::gru_forward(p.forward_cell, x, pass ? &pass->fwd : nullptr);
  const MatrixF hb = reversed_rows(nn::gru_forward(p.backward_cell, MatrixF(reversed_rows(x)), pass ? &pass->bwd : nullptr));
  MatrixF h(steps, hf.cols() + hb.cols());
  h << hf, hb;
  const MatrixF context = nn::attention_forward(p.attention, h, pass ? &pass->attention : nullptr);
  const MatrixF z = nn::dense_forward(p.hidden, context, pass ? &pass->hidden : nullptr);
  const MatrixF logit = nn::dense_forward(p.output, z, pass ? &pass->output : nullptr);
  const double prob = 1.0 / (1.0 + std::exp(-static_cast<double>(logit(0, 0))));
  if (pass) pass->probability = prob;
  return prob;
}

/// Gradient of BCE for one sample; grads ordered as ClassifierParams::parameters().
double backprop(const ClassifierParams& p, const Pass& pass, Label label, nn::GradList<float>& grads) {
  const double y = label == Label::fake ? 1.0 : 0.0;
  const double prob = std::clamp(pass.probability, 1e-12, 1.0 - 1e-12);
  const double loss = -(y * std::log(prob) + (1.0 - y) * std::log(1.0 - prob));
  MatrixF dlogit(1, 1);
  dlogit(0, 0) = static_cast<float>(pass.probability - y);

  auto slice = [&](std::size_t from, std::size_t count) {
    return std::vector<MatrixF>(grads.begin() + static_cast<std::ptrdiff_t>(from),
                                grads.begin() + static_cast<std::ptrdiff_t>(from + count));
  };
  auto g_fwd = slice(0, 4), g_bwd = slice(4, 4), g_att = slice(8, 3), g_hid = slice(11, 2), g_out = slice(13, 2);
  const MatrixF dz = nn::dense_backward(p.output, pass.output, dlogit, g_out);
  const MatrixF dcontext = nn::dense_backward(p.hidden, pass.hidden, dz, g_hid);
  const MatrixF dh = nn::attention_backward(p.attention, pass.attention, RowVectorF(dcontext.row(0)), g_att);
  const Index hs = p.hidden_size();
  nn::gru_backward(p.forward_cell, pass.fwd, MatrixF(dh.leftCols(hs)), g_fwd);
  nn::gru_backward(p.backward_cell, pass.bwd, MatrixF(reversed_rows(dh.rightCols(hs))), g_bwd);
  std::size_t at = 0;
  for (auto* part : {&g_fwd, &g_bwd, &g_att, &g_hid, &g_out})
    for (auto& g : *part) grads[at++] = std::move(g);
  return loss;
}

void require_both_labels(const std::vector<Label>& labels, const char* what) {
  const bool has_real = std::find(labels.begin(), labels.end(), Label::real) != labels.end();
  const bool has_fake = std::find(labels.begin(), labels.end(), Label::fake) != labels.end();
  if (!has_real || !has_fake) throw MetricsError(std::string(what) + ": requires both real and fake items");
}

}  // namespace

nn::ParamList<float> ClassifierParams::parameters() {
  nn::ParamList<float> out;
  nn::append_params(forward_cell, kPrefix + "forward_cell.", out);
  nn::append_params(backward_cell, kPrefix + "backward_cell.", out);
  nn::append_params(attention, kPrefix + "attention.", out);
  nn::append_params(hidden, kPrefix + "hidden.", out);
  nn::append_params(output, kPrefix + "output.", out);
  return out;
}

void ClassifierParams::validate() const {
  for (const auto* l : {&forward_cell, &backward_cell, &attention, &hidden, &output}) nn::check_layer_weights(*l);
  const Index e = embedding.cols();
  const Index h = hidden_size();
  if (forward_cell.spec.in_dim != e || backward_cell.spec.in_dim != e || backward_cell.spec.out_dim != h ||
      attention.spec.in_dim != 2 * h || hidden.spec.in_dim != 2 * h || output.spec.in_dim != hidden.spec.out_dim ||
      output.spec.out_dim != 1) {
    throw ConfigError("adversary: inconsistent layer shapes");
  }
}

ClassifierParams init_classifier(const MatrixF& embedding, Index hidden_size, std::mt19937_64& rng) {
  ClassifierParams p;
  p.embedding = embedding;
  const Index e = embedding.cols();
  p.forward_cell = nn::make_layer<float>(nn::recurrent_spec(e, hidden_size), rng);
  p.backward_cell = nn::make_layer<float>(nn::recurrent_spec(e, hidden_size), rng);
  p.attention = nn::make_layer<float>(nn::attention_spec(2 * hidden_size), rng);
  p.hidden = nn::make_layer<float>(nn::dense_spec(2 * hidden_size, hidden_size, nn::Activation::relu), rng);
  p.output = nn::make_layer<float>(nn::dense_spec(hidden_size, 1), rng);
  return p;
}

double confidence(const ClassifierParams& params, const TokenSeq& seq) { return run(params, seq, nullptr); }

std::vector<LabeledSeq> label_sequences(const std::vector<NewsItem>& items, const Vocabulary& vocab) {
  std::vector<LabeledSeq> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back({tokenize(item.text, vocab), item.label});
  return out;
}

ClassifierTrainResult train_classifier(const std::vector<LabeledSeq>& corpus, ClassifierParams params,
                                       const ClassifierTrainOptions& options) {
  params.validate();
  std::vector<Label> labels;
  for (const auto& s : corpus) labels.push_back(s.label);
  try {
    require_both_labels(labels, "train_classifier");
  } catch (const MetricsError& e) {
    throw DataError(e.what());
  }
  ClassifierTrainResult result;
  auto refs = params.parameters();
  auto adam = nn::make_adam(refs, options.adam);
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t i : order) {
      Pass pass;
      run(params, corpus[i].seq, &pass);
      auto grads = nn::zeros_like(refs);
      total += backprop(params, pass, corpus[i].label, grads);
      nn::adam_step(adam, refs, grads);
    }
    const double bce = total / static_cast<double>(corpus.size());
    if (!std::isfinite(bce)) throw TrainingError("train_classifier: non-finite loss in epoch " + std::to_string(epoch));
    result.loss_trace.push_back(bce);
  }
  result.params = std::move(params);
  return result;
}

double rank_auc(const std::vector<double>& scores, const std::vector<Label>& labels) {
  if (scores.size() != labels.size()) throw DimensionError("rank_auc: scores and labels differ in length");
  require_both_labels(labels, "rank_auc");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mid-ranks (1-based) for tie groups.
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double positive_rank_sum = 0.0;
  double pos = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == Label::fake) {
      positive_rank_sum += rank[i];
      pos += 1.0;
    }
  }
  const double neg = static_cast<double>(n) - pos;
  return (positive_rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

ClassifierMetrics classification_metrics(const std::vector<double>& scores, const std::vector<Label>& labels) {
  ClassifierMetrics m;
  m.auc = rank_auc(scores, labels);
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted_fake = scores[i] >= 0.5;
    const bool fake = labels[i] == Label::fake;
    if (predicted_fake == fake) ++correct;
    if (predicted_fake && fake) ++tp;
    if (predicted_fake && !fake) ++fp;
    if (!predicted_fake && fake) ++fn;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());
  m.f1 = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  return m;
}

ClassifierMetrics evaluate_classifier(const ClassifierParams& params, const std::vector<LabeledSeq>& corpus) {
  std::vector<double> scores;
  std::vector<Label> labels;
  for (const auto& s : corpus) {
    scores.push_back(confidence(params, s.seq));
    labels.push_back(s.label);
  }
  return classification_metrics(scores, labels);
}

void put_classifier(nn::TensorFile& file, const ClassifierParams& params) {
  file.tensors[kPrefix + "embedding"] = params.embedding;
  nn::put_layer(file, kPrefix + "forward_cell.", params.forward_cell);
  nn::put_layer(file, kPrefix + "backward_cell.", params.backward_cell);
  nn::put_layer(file, kPrefix + "attention.", params.attention);
  nn::put_layer(file, kPrefix + "hidden.", params.hidden);
  nn::put_layer(file, kPrefix + "output.", params.output);
}

ClassifierParams get_classifier(const nn::TensorFile& file) {
  ClassifierParams p;
  p.embedding = file.at(kPrefix + "embedding");
  p.forward_cell = nn::get_layer(file, kPrefix + "forward_cell.");
  p.backward_cell = nn::get_layer(file, kPrefix + "backward_cell.");
  p.attention = nn::get_layer(file, kPrefix + "attention.");
  p.hidden = nn::get_layer(file, kPrefix + "hidden.");
  p.output = nn::get_layer(file, kPrefix + "output.");
  p.validate();
  return p;
}

}  // namespace rltg
