#pragma once

#include <random>
#include <vector>

#include "rltg/corpus.hpp"
#include "rltg/nn/adam.hpp"
#include "rltg/nn/weights_io.hpp"

namespace rltg {

using nn::Index;

/// Fake-news classifier: frozen token embeddings -> bidirectional recurrent encoder
/// -> attention pooling -> dense (2h -> h, relu) -> dense (h -> 1) -> sigmoid.
struct ClassifierParams {
  nn::MatrixF embedding;  // frozen, not trained
  nn::Layer<float> forward_cell;
  nn::Layer<float> backward_cell;
  nn::Layer<float> attention;
  nn::Layer<float> hidden;
  nn::Layer<float> output;  // identity; the sigmoid is applied on top

  Index hidden_size() const { return forward_cell.spec.out_dim; }
  Index context_size() const { return 2 * hidden_size(); }
  nn::ParamList<float> parameters();
  void validate() const;
};

ClassifierParams init_classifier(const nn::MatrixF& embedding, Index hidden_size, std::mt19937_64& rng);

/// Probability that `seq` is fake. Trailing PAD tokens are ignored.
double confidence(const ClassifierParams& params, const TokenSeq& seq);

struct LabeledSeq {
  TokenSeq seq;
  Label label;
};

std::vector<LabeledSeq> label_sequences(const std::vector<NewsItem>& items, const Vocabulary& vocab);

struct ClassifierTrainOptions {
  std::size_t epochs = 20;
  nn::AdamOptions adam{};
  std::uint64_t seed = 0;
};

struct ClassifierTrainResult {
  ClassifierParams params;
  std::vector<double> loss_trace;  // mean binary cross-entropy per epoch
};

ClassifierTrainResult train_classifier(const std::vector<LabeledSeq>& corpus, ClassifierParams params,
                                       const ClassifierTrainOptions& options);

struct ClassifierMetrics {
  double accuracy = 0.0;  // threshold 0.5
  double auc = 0.0;       // Mann-Whitney rank statistic, ties count half
  double f1 = 0.0;        // of the fake class
};

/// Metrics from raw scores (probability of fake); throws MetricsError on a single-class input.
ClassifierMetrics classification_metrics(const std::vector<double>& scores, const std::vector<Label>& labels);
double rank_auc(const std::vector<double>& scores, const std::vector<Label>& labels);

ClassifierMetrics evaluate_classifier(const ClassifierParams& params, const std::vector<LabeledSeq>& corpus);

inline constexpr const char* kAdversaryPrefix = "adv.";
void put_classifier(nn::TensorFile& file, const ClassifierParams& params);
ClassifierParams get_classifier(const nn::TensorFile& file);

}  // namespace rltg
