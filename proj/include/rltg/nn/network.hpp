#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "rltg/nn/layers.hpp"

namespace rltg::nn {

/// A feed-forward stack of layers. Rows of the input are positions or batch items;
/// attention_pool collapses rows to one.
template <typename Scalar>
struct Network {
  std::vector<Layer<Scalar>> layers;
  /// Bumped on every in-place parameter update so caches from earlier forwards are rejected.
  std::uint64_t revision = 0;

  Index in_dim() const { return layers.front().spec.in_dim; }
  Index out_dim() const { return layers.back().spec.out_dim; }

  template <typename Other>
  Network<Other> cast() const {
    Network<Other> out;
    for (const auto& l : layers) out.layers.push_back(l.template cast<Other>());
    return out;
  }
};

template <typename Scalar>
Network<Scalar> make_network(const std::vector<LayerSpec>& specs, std::mt19937_64& rng) {
  if (specs.empty()) throw ConfigError("network needs at least one layer");
  Network<Scalar> net;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (i > 0 && specs[i].in_dim != specs[i - 1].out_dim) {
      throw ConfigError("layer " + std::to_string(i) + " in_dim " + std::to_string(specs[i].in_dim) +
                        " does not match previous out_dim " + std::to_string(specs[i - 1].out_dim));
    }
    net.layers.push_back(make_layer<Scalar>(specs[i], rng));
  }
  return net;
}

/// Trainable tensors named "<prefix><layer index>.<weight name>".
template <typename Scalar>
ParamList<Scalar> parameters(Network<Scalar>& net, const std::string& prefix = "") {
  ParamList<Scalar> out;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    append_params(net.layers[i], prefix + std::to_string(i) + ".", out);
  }
  return out;
}

template <typename Scalar>
using LayerCache = std::variant<DenseCache<Scalar>, ConvCache<Scalar>, GruCache<Scalar>, AttentionCache<Scalar>>;

template <typename Scalar>
struct ForwardCache {
  const Network<Scalar>* source = nullptr;
  std::uint64_t revision = 0;
  std::vector<LayerCache<Scalar>> layers;
};

template <typename Scalar>
struct ForwardResult {
  Matrix<Scalar> output;
  ForwardCache<Scalar> cache;
};

template <typename Scalar>
Matrix<Scalar> layer_forward(const Layer<Scalar>& layer, const Matrix<Scalar>& x, LayerCache<Scalar>* cache) {
  switch (layer.spec.kind) {
    case LayerKind::dense: {
      DenseCache<Scalar> c;
      Matrix<Scalar> y = dense_forward(layer, x, cache ? &c : nullptr);
      if (cache) *cache = std::move(c);
      return y;
    }
    case LayerKind::conv1d: {
      ConvCache<Scalar> c;
      Matrix<Scalar> y = conv1d_forward(layer, x, cache ? &c : nullptr);
      if (cache) *cache = std::move(c);
      return y;
    }
    case LayerKind::recurrent: {
      GruCache<Scalar> c;
      Matrix<Scalar> y = gru_forward(layer, x, cache ? &c : nullptr);
      if (cache) *cache = std::move(c);
      return y;
    }
    case LayerKind::attention_pool: {
      AttentionCache<Scalar> c;
      Matrix<Scalar> y = attention_forward(layer, x, cache ? &c : nullptr);
      if (cache) *cache = std::move(c);
      return y;
    }
  }
  throw ConfigError("unknown layer kind");
}

/// Inference-only forward pass.
template <typename Scalar>
Matrix<Scalar> predict(const Network<Scalar>& net, const Matrix<Scalar>& x) {
  if (net.layers.empty()) throw ConfigError("empty network");
  if (x.cols() != net.in_dim()) {
    throw DimensionError("network input has " + std::to_string(x.cols()) + " columns, expected " +
                         std::to_string(net.in_dim()));
  }
  Matrix<Scalar> h = x;
  for (const auto& layer : net.layers) h = layer_forward<Scalar>(layer, h, nullptr);
  return h;
}

template <typename Scalar>
ForwardResult<Scalar> forward(const Network<Scalar>& net, const Matrix<Scalar>& x) {
  if (net.layers.empty()) throw ConfigError("empty network");
  if (x.cols() != net.in_dim()) {
    throw DimensionError("network input has " + std::to_string(x.cols()) + " columns, expected " +
                         std::to_string(net.in_dim()));
  }
  ForwardResult<Scalar> result;
  result.cache.source = &net;
  result.cache.revision = net.revision;
  result.cache.layers.resize(net.layers.size());
  Matrix<Scalar> h = x;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    h = layer_forward<Scalar>(net.layers[i], h, &result.cache.layers[i]);
  }
  result.output = std::move(h);
  return result;
}

template <typename Scalar>
struct NetworkGradients {
  std::vector<std::vector<Matrix<Scalar>>> layers;  // aligned with Network::layers[i].weights
  Matrix<Scalar> input;

  /// Flattened in the order produced by parameters().
  GradList<Scalar> flat() const {
    GradList<Scalar> out;
    for (const auto& l : layers)
      for (const auto& g : l) out.push_back(g);
    return out;
  }
};

template <typename Scalar>
NetworkGradients<Scalar> zero_gradients(const Network<Scalar>& net) {
  NetworkGradients<Scalar> g;
  for (const auto& layer : net.layers) {
    std::vector<Matrix<Scalar>> lg;
    for (const auto& w : layer.weights) lg.push_back(Matrix<Scalar>::Zero(w.rows(), w.cols()));
    g.layers.push_back(std::move(lg));
  }
  return g;
}

/// Backward pass; gradients are accumulated into `grads` so callers can sum over samples.
template <typename Scalar>
void backward_into(const Network<Scalar>& net, const ForwardCache<Scalar>& cache, const Matrix<Scalar>& upstream,
                   NetworkGradients<Scalar>& grads) {
  if (cache.source != &net || cache.revision != net.revision || cache.layers.size() != net.layers.size()) {
    throw UsageError("backward: cache does not belong to this network state (stale or mismatched forward)");
  }
  if (grads.layers.size() != net.layers.size()) throw DimensionError("backward: gradient buffer layout mismatch");
  Matrix<Scalar> d = upstream;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const auto& layer = net.layers[k];
    auto& g = grads.layers[k];
    switch (layer.spec.kind) {
      case LayerKind::dense:
        d = dense_backward(layer, std::get<DenseCache<Scalar>>(cache.layers[k]), d, g);
        break;
      case LayerKind::conv1d:
        d = conv1d_backward(layer, std::get<ConvCache<Scalar>>(cache.layers[k]), d, g);
        break;
      case LayerKind::recurrent:
        d = gru_backward(layer, std::get<GruCache<Scalar>>(cache.layers[k]), d, g);
        break;
      case LayerKind::attention_pool: {
        if (d.rows() != 1) throw DimensionError("attention_pool upstream gradient must have one row");
        RowVector<Scalar> dc = d.row(0);
        d = attention_backward(layer, std::get<AttentionCache<Scalar>>(cache.layers[k]), dc, g);
        break;
      }
    }
  }
  grads.input = std::move(d);
}

template <typename Scalar>
NetworkGradients<Scalar> backward(const Network<Scalar>& net, const ForwardCache<Scalar>& cache,
                                  const Matrix<Scalar>& upstream) {
  NetworkGradients<Scalar> grads = zero_gradients(net);
  backward_into(net, cache, upstream, grads);
  return grads;
}

}  // namespace rltg::nn
