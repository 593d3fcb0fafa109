#include "rltg/statecoder.hpp"

#include <cmath>
#include <numeric>

namespace rltg {

using nn::Activation;
using nn::MatrixF;
using nn::RowVectorF;

namespace {

using RowMajorMap = Eigen::Map<const MatrixF>;

void require_trained(bool trained, const char* what) {
  if (!trained) throw ConfigError(std::string(what) + " has not been trained");
}

std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

struct Ae2Pass {
  nn::ConvCache<float> conv_in;
  nn::DenseCache<float> encode;
  nn::DenseCache<float> decode;
  nn::ConvCache<float> conv_out;
  MatrixF output;
};

MatrixF ae2_forward(const Ae2Params& ae2, const MatrixF& m, Ae2Pass* pass) {
  const Index k = ae2.topk;
  const Index c = ae2.channels();
  const MatrixF features = nn::conv1d_forward(ae2.conv_in, m, pass ? &pass->conv_in : nullptr);
  const MatrixF flat = RowMajorMap(features.data(), 1, k * c);
  const MatrixF code = nn::dense_forward(ae2.encode, flat, pass ? &pass->encode : nullptr);
  if (!pass) return code;
  const MatrixF up = nn::dense_forward(ae2.decode, code, &pass->decode);
  const MatrixF grid = RowMajorMap(up.data(), k, c);
  pass->output = nn::conv1d_forward(ae2.conv_out, grid, &pass->conv_out);
  return code;
}

double ae2_backward(const Ae2Params& ae2, const MatrixF& m, const Ae2Pass& pass, nn::GradList<float>& grads) {
  const Index k = ae2.topk;
  const Index c = ae2.channels();
  const MatrixF diff = pass.output - m;
  const double loss = static_cast<double>(diff.squaredNorm()) / static_cast<double>(diff.size());
  const MatrixF dout = diff * (2.0f / static_cast<float>(diff.size()));
  std::vector<MatrixF> g_conv_out(grads.begin() + 6, grads.begin() + 8);
  std::vector<MatrixF> g_decode(grads.begin() + 4, grads.begin() + 6);
  std::vector<MatrixF> g_encode(grads.begin() + 2, grads.begin() + 4);
  std::vector<MatrixF> g_conv_in(grads.begin(), grads.begin() + 2);
  const MatrixF dgrid = nn::conv1d_backward(ae2.conv_out, pass.conv_out, dout, g_conv_out);
  const MatrixF dup = RowMajorMap(dgrid.data(), 1, k * c);
  const MatrixF dcode = nn::dense_backward(ae2.decode, pass.decode, dup, g_decode);
  const MatrixF dflat = nn::dense_backward(ae2.encode, pass.encode, dcode, g_encode);
  const MatrixF dfeatures = RowMajorMap(dflat.data(), k, c);
  nn::conv1d_backward(ae2.conv_in, pass.conv_in, dfeatures, g_conv_in);
  std::copy(g_conv_in.begin(), g_conv_in.end(), grads.begin());
  std::copy(g_encode.begin(), g_encode.end(), grads.begin() + 2);
  std::copy(g_decode.begin(), g_decode.end(), grads.begin() + 4);
  std::copy(g_conv_out.begin(), g_conv_out.end(), grads.begin() + 6);
  return loss;
}

void check_topk_lists(const std::vector<std::vector<TokenId>>& topk, Index k, Index vocab) {
  for (std::size_t i = 0; i < topk.size(); ++i) {
    if (static_cast<Index>(topk[i].size()) != k) {
      throw DataError("top-K list " + std::to_string(i) + " has length " + std::to_string(topk[i].size()) +
                      ", expected K=" + std::to_string(k));
    }
    for (TokenId t : topk[i]) {
      if (t < 0 || t >= vocab) throw DataError("top-K list " + std::to_string(i) + " has out-of-range token");
    }
  }
}

}  // namespace

Ae1Params init_ae1(Index embed_dim, Index code_dim, std::mt19937_64& rng) {
  Ae1Params ae;
  ae.encoder = nn::make_network<float>(
      {nn::dense_spec(embed_dim, 2 * code_dim, Activation::relu), nn::dense_spec(2 * code_dim, code_dim)}, rng);
  ae.decoder = nn::make_network<float>(
      {nn::dense_spec(code_dim, 2 * code_dim, Activation::relu), nn::dense_spec(2 * code_dim, embed_dim)}, rng);
  return ae;
}

Ae2Params init_ae2(Index embed_dim, Index topk, Index code_dim, std::mt19937_64& rng, Index channels,
                   Index kernel_width) {
  if (topk < 1) throw ConfigError("init_ae2: K must be >= 1");
  Ae2Params ae;
  ae.topk = topk;
  ae.conv_in = nn::make_layer<float>(nn::conv1d_spec(embed_dim, channels, kernel_width, Activation::relu), rng);
  ae.encode = nn::make_layer<float>(nn::dense_spec(topk * channels, code_dim), rng);
  ae.decode = nn::make_layer<float>(nn::dense_spec(code_dim, topk * channels, Activation::relu), rng);
  ae.conv_out = nn::make_layer<float>(nn::conv1d_spec(channels, embed_dim, kernel_width), rng);
  return ae;
}

nn::ParamList<float> Ae2Params::parameters() {
  nn::ParamList<float> out;
  nn::append_params(conv_in, "ae2.conv_in.", out);
  nn::append_params(encode, "ae2.encode.", out);
  nn::append_params(decode, "ae2.decode.", out);
  nn::append_params(conv_out, "ae2.conv_out.", out);
  return out;
}

void Ae2Params::validate() const {
  for (const auto* l : {&conv_in, &encode, &decode, &conv_out}) nn::check_layer_weights(*l);
  const Index c = channels();
  if (encode.spec.in_dim != topk * c || decode.spec.out_dim != topk * c || conv_out.spec.in_dim != c ||
      conv_out.spec.out_dim != embed_dim() || decode.spec.in_dim != code_dim()) {
    throw ConfigError("ae2: layer shapes are inconsistent with K=" + std::to_string(topk));
  }
}

StateDataset collect_states(const LmParams& lm, const std::vector<TokenSeq>& corpus, std::size_t k,
                            std::size_t n_samples, std::mt19937_64& rng) {
  if (n_samples < 1) throw DomainError("collect_states: n_samples must be >= 1");
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (corpus[i].size() >= 2) usable.push_back(i);
  if (usable.empty()) throw DataError("collect_states: every corpus sequence is shorter than 2 tokens");

  StateDataset data;
  data.hidden.resize(static_cast<Index>(n_samples), lm.embed_dim());
  data.topk.reserve(n_samples);
  std::uniform_int_distribution<std::size_t> pick(0, usable.size() - 1);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const TokenSeq& seq = corpus[usable[pick(rng)]];
    std::uniform_int_distribution<std::size_t> cut(1, seq.size() - 1);
    TokenSeq prefix;
    prefix.tokens.assign(seq.tokens.begin(), seq.tokens.begin() + static_cast<std::ptrdiff_t>(cut(rng)));
    const LmOutput out = lm_next(lm, prefix);
    data.hidden.row(static_cast<Index>(s)) = out.hidden;
    data.topk.push_back(top_k(out.probs, k));
  }
  return data;
}

AeTrainResult<Ae1Params> train_ae1(const MatrixF& hidden, Ae1Params params, const AeTrainOptions& options) {
  if (hidden.rows() == 0) throw DomainError("train_ae1: empty dataset");
  if (hidden.cols() != params.input_dim()) {
    throw ConfigError("train_ae1: hidden size " + std::to_string(hidden.cols()) + " does not match AE input " +
                      std::to_string(params.input_dim()));
  }
  const std::size_t batch = std::max<std::size_t>(1, options.batch);
  auto enc_refs = nn::parameters(params.encoder, "ae1.encoder.");
  auto dec_refs = nn::parameters(params.decoder, "ae1.decoder.");
  nn::ParamList<float> refs = enc_refs;
  refs.insert(refs.end(), dec_refs.begin(), dec_refs.end());
  auto adam = nn::make_adam(refs, options.adam);
  std::mt19937_64 rng(options.seed);

  AeTrainResult<Ae1Params> result;
  const auto n = static_cast<std::size_t>(hidden.rows());
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const auto order = shuffled(n, rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      MatrixF x(static_cast<Index>(end - start), hidden.cols());
      for (std::size_t i = start; i < end; ++i) x.row(static_cast<Index>(i - start)) = hidden.row(static_cast<Index>(order[i]));
      auto enc = nn::forward(params.encoder, x);
      auto dec = nn::forward(params.decoder, enc.output);
      const MatrixF diff = dec.output - x;
      total += static_cast<double>(diff.squaredNorm()) / static_cast<double>(hidden.cols());
      const MatrixF dout = diff * (2.0f / static_cast<float>(diff.size()));
      auto dec_grads = nn::backward(params.decoder, dec.cache, dout);
      auto enc_grads = nn::backward(params.encoder, enc.cache, dec_grads.input);
      auto grads = enc_grads.flat();
      for (auto& g : dec_grads.flat()) grads.push_back(std::move(g));
      nn::adam_step(adam, refs, grads);
      ++params.encoder.revision;
      ++params.decoder.revision;
    }
    const double mse = total / static_cast<double>(n);
    if (!std::isfinite(mse)) throw TrainingError("train_ae1: non-finite loss in epoch " + std::to_string(epoch));
    result.loss_trace.push_back(mse);
  }
  params.trained = true;
  result.params = std::move(params);
  return result;
}

MatrixF embed_candidates(const MatrixF& embedding, const std::vector<TokenId>& candidates) {
  MatrixF m(static_cast<Index>(candidates.size()), embedding.cols());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const TokenId t = candidates[i];
    if (t < 0 || t >= embedding.rows()) throw DataError("candidate token " + std::to_string(t) + " outside embedding");
    m.row(static_cast<Index>(i)) = embedding.row(t);
  }
  return m;
}

AeTrainResult<Ae2Params> train_ae2(const std::vector<std::vector<TokenId>>& topk, const MatrixF& embedding,
                                   Ae2Params params, const AeTrainOptions& options) {
  if (topk.empty()) throw DomainError("train_ae2: empty dataset");
  params.validate();
  if (embedding.cols() != params.embed_dim()) throw ConfigError("train_ae2: embedding size does not match AE input");
  check_topk_lists(topk, params.topk, embedding.rows());
  const std::size_t batch = std::max<std::size_t>(1, options.batch);
  auto refs = params.parameters();
  auto adam = nn::make_adam(refs, options.adam);
  std::mt19937_64 rng(options.seed);

  AeTrainResult<Ae2Params> result;
  const std::size_t n = topk.size();
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const auto order = shuffled(n, rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      auto grads = nn::zeros_like(refs);
      for (std::size_t i = start; i < end; ++i) {
        const MatrixF m = embed_candidates(embedding, topk[order[i]]);
        Ae2Pass pass;
        ae2_forward(params, m, &pass);
        total += ae2_backward(params, m, pass, grads);
      }
      const float scale = 1.0f / static_cast<float>(end - start);
      for (auto& g : grads) g *= scale;
      nn::adam_step(adam, refs, grads);
    }
    const double mse = total / static_cast<double>(n);
    if (!std::isfinite(mse)) throw TrainingError("train_ae2: non-finite loss in epoch " + std::to_string(epoch));
    result.loss_trace.push_back(mse);
  }
  params.trained = true;
  result.params = std::move(params);
  return result;
}

RowVectorF ae1_encode(const Ae1Params& ae1, const RowVectorF& hidden) {
  return nn::predict(ae1.encoder, MatrixF(hidden)).row(0);
}

MatrixF ae1_reconstruct(const Ae1Params& ae1, const MatrixF& hidden) {
  return nn::predict(ae1.decoder, nn::predict(ae1.encoder, hidden));
}

RowVectorF ae2_encode(const Ae2Params& ae2, const MatrixF& candidates) {
  if (candidates.rows() != ae2.topk || candidates.cols() != ae2.embed_dim()) {
    throw DimensionError("ae2: candidate matrix " + nn::shape_of(candidates) + " does not match " +
                         nn::shape_string(ae2.topk, ae2.embed_dim()));
  }
  return ae2_forward(ae2, candidates, nullptr).row(0);
}

MatrixF ae2_reconstruct(const Ae2Params& ae2, const MatrixF& candidates) {
  Ae2Pass pass;
  ae2_forward(ae2, candidates, &pass);
  return pass.output;
}

double ae1_reconstruction_mse(const Ae1Params& ae1, const MatrixF& hidden) {
  const MatrixF diff = ae1_reconstruct(ae1, hidden) - hidden;
  return static_cast<double>(diff.squaredNorm()) / static_cast<double>(diff.size());
}

double ae2_reconstruction_mse(const Ae2Params& ae2, const std::vector<std::vector<TokenId>>& topk,
                              const MatrixF& embedding) {
  if (topk.empty()) throw DomainError("ae2_reconstruction_mse: empty dataset");
  double total = 0.0;
  for (const auto& list : topk) {
    const MatrixF m = embed_candidates(embedding, list);
    const MatrixF diff = ae2_reconstruct(ae2, m) - m;
    total += static_cast<double>(diff.squaredNorm()) / static_cast<double>(diff.size());
  }
  return total / static_cast<double>(topk.size());
}

StateVec make_state(const Ae1Params& ae1, const Ae2Params& ae2, const RowVectorF& hidden,
                    const std::vector<TokenId>& topk, const MatrixF& embedding) {
  require_trained(ae1.trained, "AE1");
  require_trained(ae2.trained, "AE2");
  if (hidden.size() != ae1.input_dim()) {
    throw ConfigError("make_state: hidden size " + std::to_string(hidden.size()) + " does not match AE1 input " +
                      std::to_string(ae1.input_dim()));
  }
  if (static_cast<Index>(topk.size()) != ae2.topk) {
    throw ConfigError("make_state: top-K list of length " + std::to_string(topk.size()) + " but AE2 expects " +
                      std::to_string(ae2.topk));
  }
  if (embedding.cols() != ae2.embed_dim()) throw ConfigError("make_state: embedding size does not match AE2 input");
  const RowVectorF cg = ae1_encode(ae1, hidden);
  const RowVectorF cw = ae2_encode(ae2, embed_candidates(embedding, topk));
  StateVec s(cg.size() + cw.size());
  s << cg, cw;
  return s;
}

// ---------------------------------------------------------------------------

void put_ae1(nn::TensorFile& file, const Ae1Params& ae1) {
  nn::put_network(file, "ae1.encoder.", ae1.encoder);
  nn::put_network(file, "ae1.decoder.", ae1.decoder);
}

Ae1Params get_ae1(const nn::TensorFile& file) {
  Ae1Params ae;
  ae.encoder = nn::get_network(file, "ae1.encoder.");
  ae.decoder = nn::get_network(file, "ae1.decoder.");
  ae.trained = true;
  return ae;
}

void put_ae2(nn::TensorFile& file, const Ae2Params& ae2) {
  nn::put_layer(file, "ae2.conv_in.", ae2.conv_in);
  nn::put_layer(file, "ae2.encode.", ae2.encode);
  nn::put_layer(file, "ae2.decode.", ae2.decode);
  nn::put_layer(file, "ae2.conv_out.", ae2.conv_out);
  file.meta["ae2.topk"] = ae2.topk;
}

Ae2Params get_ae2(const nn::TensorFile& file) {
  if (!file.meta.contains("ae2.topk")) throw DataError("weight file has no AE2 metadata");
  Ae2Params ae;
  ae.conv_in = nn::get_layer(file, "ae2.conv_in.");
  ae.encode = nn::get_layer(file, "ae2.encode.");
  ae.decode = nn::get_layer(file, "ae2.decode.");
  ae.conv_out = nn::get_layer(file, "ae2.conv_out.");
  ae.topk = file.meta["ae2.topk"].get<Index>();
  ae.validate();
  ae.trained = true;
  return ae;
}

void put_states(nn::TensorFile& file, const StateDataset& states) {
  file.tensors["states.H"] = states.hidden;
  const Index k = states.topk.empty() ? 0 : static_cast<Index>(states.topk.front().size());
  MatrixF ids(static_cast<Index>(states.topk.size()), k);
  for (std::size_t i = 0; i < states.topk.size(); ++i)
    for (Index j = 0; j < k; ++j) ids(static_cast<Index>(i), j) = static_cast<float>(states.topk[i][static_cast<std::size_t>(j)]);
  file.tensors["states.topk"] = std::move(ids);
}

StateDataset get_states(const nn::TensorFile& file) {
  StateDataset states;
  states.hidden = file.at("states.H");
  const MatrixF& ids = file.at("states.topk");
  if (ids.rows() != states.hidden.rows()) throw DataError("states.H and states.topk row counts differ");
  for (Index i = 0; i < ids.rows(); ++i) {
    std::vector<TokenId> list(static_cast<std::size_t>(ids.cols()));
    for (Index j = 0; j < ids.cols(); ++j) list[static_cast<std::size_t>(j)] = static_cast<TokenId>(ids(i, j));
    states.topk.push_back(std::move(list));
  }
  return states;
}

}  // namespace rltg
