#pragma once

#include <random>
#include <vector>

#include "rltg/langmodel.hpp"

namespace rltg {

/// RL state: concat(c_g, c_w).
using StateVec = nn::RowVectorF;

/// MLP autoencoder over LM hidden states: e -> 2 d_g (relu) -> d_g, mirrored decoder.
struct Ae1Params {
  nn::Network<float> encoder;
  nn::Network<float> decoder;
  bool trained = false;

  Index input_dim() const { return encoder.in_dim(); }
  Index code_dim() const { return encoder.out_dim(); }
};

/// Convolutional autoencoder over the K x e matrix of embedded candidate words.
/// Encoder: conv1d e -> C (relu) over the K positions, flatten, dense K*C -> d_w.
/// Decoder: dense d_w -> K*C (relu), reshape, conv1d C -> e.
struct Ae2Params {
  nn::Layer<float> conv_in;
  nn::Layer<float> encode;
  nn::Layer<float> decode;
  nn::Layer<float> conv_out;
  Index topk = 0;
  bool trained = false;

  Index embed_dim() const { return conv_in.spec.in_dim; }
  Index channels() const { return conv_in.spec.out_dim; }
  Index code_dim() const { return encode.spec.out_dim; }
  nn::ParamList<float> parameters();
  void validate() const;
};

Ae1Params init_ae1(Index embed_dim, Index code_dim, std::mt19937_64& rng);
Ae2Params init_ae2(Index embed_dim, Index topk, Index code_dim, std::mt19937_64& rng, Index channels = 32,
                   Index kernel_width = 3);

/// LM hidden states and their top-K candidate lists harvested from corpus prefixes.
struct StateDataset {
  nn::MatrixF hidden;                         // n x e
  std::vector<std::vector<TokenId>> topk;     // n lists of length K
};

StateDataset collect_states(const LmParams& lm, const std::vector<TokenSeq>& corpus, std::size_t k,
                            std::size_t n_samples, std::mt19937_64& rng);

struct AeTrainOptions {
  std::size_t epochs = 20;
  std::size_t batch = 32;
  nn::AdamOptions adam{};
  std::uint64_t seed = 0;
};

template <typename Params>
struct AeTrainResult {
  Params params;
  std::vector<double> loss_trace;  // mean reconstruction MSE per epoch
};

AeTrainResult<Ae1Params> train_ae1(const nn::MatrixF& hidden, Ae1Params params, const AeTrainOptions& options);
AeTrainResult<Ae2Params> train_ae2(const std::vector<std::vector<TokenId>>& topk, const nn::MatrixF& embedding,
                                   Ae2Params params, const AeTrainOptions& options);

/// K x e matrix of embedding rows for the candidate list.
nn::MatrixF embed_candidates(const nn::MatrixF& embedding, const std::vector<TokenId>& candidates);

nn::RowVectorF ae1_encode(const Ae1Params& ae1, const nn::RowVectorF& hidden);
nn::MatrixF ae1_reconstruct(const Ae1Params& ae1, const nn::MatrixF& hidden);
nn::RowVectorF ae2_encode(const Ae2Params& ae2, const nn::MatrixF& candidates);
nn::MatrixF ae2_reconstruct(const Ae2Params& ae2, const nn::MatrixF& candidates);

double ae1_reconstruction_mse(const Ae1Params& ae1, const nn::MatrixF& hidden);
double ae2_reconstruction_mse(const Ae2Params& ae2, const std::vector<std::vector<TokenId>>& topk,
                              const nn::MatrixF& embedding);

/// s = concat(AE1 encoder(H), AE2 encoder(embedded top-K)).
StateVec make_state(const Ae1Params& ae1, const Ae2Params& ae2, const nn::RowVectorF& hidden,
                    const std::vector<TokenId>& topk, const nn::MatrixF& embedding);

void put_ae1(nn::TensorFile& file, const Ae1Params& ae1);
Ae1Params get_ae1(const nn::TensorFile& file);
void put_ae2(nn::TensorFile& file, const Ae2Params& ae2);
Ae2Params get_ae2(const nn::TensorFile& file);
void put_states(nn::TensorFile& file, const StateDataset& states);
StateDataset get_states(const nn::TensorFile& file);

}  // namespace rltg
