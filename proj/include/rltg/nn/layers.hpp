#pragma once

#include <string>
#include <vector>

#include "rltg/nn/tensor.hpp"

namespace rltg::nn {

enum class LayerKind { dense, conv1d, recurrent, attention_pool };
enum class Activation { identity, relu, tanh, sigmoid, softmax };

std::string to_string(LayerKind kind);
std::string to_string(Activation act);

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  Index in_dim = 1;
  Index out_dim = 1;
  Activation activation = Activation::identity;
  Index kernel_width = 1;  // conv1d only

  /// Throws ConfigError if the layer description violates its invariants.
  void validate() const;
};

inline LayerSpec dense_spec(Index in, Index out, Activation act = Activation::identity) {
  return {LayerKind::dense, in, out, act, 1};
}
inline LayerSpec conv1d_spec(Index in, Index out, Index kernel_width, Activation act = Activation::identity) {
  return {LayerKind::conv1d, in, out, act, kernel_width};
}
inline LayerSpec recurrent_spec(Index in, Index hidden) {
  return {LayerKind::recurrent, in, hidden, Activation::identity, 1};
}
inline LayerSpec attention_spec(Index dim) {
  return {LayerKind::attention_pool, dim, dim, Activation::identity, 1};
}

/// A layer is its spec plus the weight tensors the kind requires:
///   dense / conv1d:  W (fan_in x out), b (1 x out); conv1d fan_in = kernel_width * in
///   recurrent (GRU): Wx (in x 3h), Wh (h x 3h), bx (1 x 3h), bh (1 x 3h); gate columns z | r | n
///   attention_pool:  W (d x d), b (1 x d), u (d x 1)
template <typename Scalar>
struct Layer {
  LayerSpec spec;
  std::vector<Matrix<Scalar>> weights;

  template <typename Other>
  Layer<Other> cast() const {
    Layer<Other> out{spec, {}};
    for (const auto& w : weights) out.weights.push_back(w.template cast<Other>());
    return out;
  }
};

/// Canonical weight names for a layer kind, in storage order.
const std::vector<std::string>& weight_names(LayerKind kind);

template <typename Scalar>
Layer<Scalar> make_layer(const LayerSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  Layer<Scalar> layer{spec, {}};
  const Index in = spec.in_dim;
  const Index out = spec.out_dim;
  switch (spec.kind) {
    case LayerKind::dense:
      layer.weights.push_back(xavier_uniform<Scalar>(in, out, in, out, rng));
      layer.weights.push_back(Matrix<Scalar>::Zero(1, out));
      break;
    case LayerKind::conv1d: {
      const Index fan_in = spec.kernel_width * in;
      layer.weights.push_back(xavier_uniform<Scalar>(fan_in, out, fan_in, out, rng));
      layer.weights.push_back(Matrix<Scalar>::Zero(1, out));
      break;
    }
    case LayerKind::recurrent:
      layer.weights.push_back(xavier_uniform<Scalar>(in, 3 * out, in, out, rng));
      layer.weights.push_back(xavier_uniform<Scalar>(out, 3 * out, out, out, rng));
      layer.weights.push_back(Matrix<Scalar>::Zero(1, 3 * out));
      layer.weights.push_back(Matrix<Scalar>::Zero(1, 3 * out));
      break;
    case LayerKind::attention_pool:
      layer.weights.push_back(xavier_uniform<Scalar>(in, in, in, in, rng));
      layer.weights.push_back(Matrix<Scalar>::Zero(1, in));
      layer.weights.push_back(xavier_uniform<Scalar>(in, 1, in, 1, rng));
      break;
  }
  return layer;
}

template <typename Scalar>
void check_layer_weights(const Layer<Scalar>& layer) {
  const auto& s = layer.spec;
  const auto& w = layer.weights;
  const auto& names = weight_names(s.kind);
  if (w.size() != names.size()) {
    throw DimensionError(to_string(s.kind) + " layer expects " + std::to_string(names.size()) + " tensors");
  }
  const Index h = s.out_dim;
  switch (s.kind) {
    case LayerKind::dense:
      require_shape(w[0], s.in_dim, h, "dense W");
      require_shape(w[1], 1, h, "dense b");
      break;
    case LayerKind::conv1d:
      require_shape(w[0], s.kernel_width * s.in_dim, h, "conv1d W");
      require_shape(w[1], 1, h, "conv1d b");
      break;
    case LayerKind::recurrent:
      require_shape(w[0], s.in_dim, 3 * h, "recurrent Wx");
      require_shape(w[1], h, 3 * h, "recurrent Wh");
      require_shape(w[2], 1, 3 * h, "recurrent bx");
      require_shape(w[3], 1, 3 * h, "recurrent bh");
      break;
    case LayerKind::attention_pool:
      require_shape(w[0], s.in_dim, s.in_dim, "attention W");
      require_shape(w[1], 1, s.in_dim, "attention b");
      require_shape(w[2], s.in_dim, 1, "attention u");
      break;
  }
}

template <typename Scalar>
void append_params(Layer<Scalar>& layer, const std::string& prefix, ParamList<Scalar>& out) {
  const auto& names = weight_names(layer.spec.kind);
  for (std::size_t i = 0; i < layer.weights.size(); ++i) out.push_back({prefix + names[i], &layer.weights[i]});
}

// ---------------------------------------------------------------------------
// Activations (row-wise for softmax)

template <typename Scalar>
Matrix<Scalar> softmax_rows(const Matrix<Scalar>& z) {
  Matrix<Scalar> y(z.rows(), z.cols());
  for (Index i = 0; i < z.rows(); ++i) {
    const Scalar m = z.row(i).maxCoeff();
    y.row(i) = (z.row(i).array() - m).exp().matrix();
    y.row(i) /= y.row(i).sum();
  }
  return y;
}

template <typename Scalar>
Matrix<Scalar> sigmoid(const Matrix<Scalar>& z) {
  return (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix();
}

template <typename Scalar>
Matrix<Scalar> activate(Activation act, const Matrix<Scalar>& z) {
  switch (act) {
    case Activation::identity:
      return z;
    case Activation::relu:
      return z.cwiseMax(Scalar(0));
    case Activation::tanh:
      return z.array().tanh().matrix();
    case Activation::sigmoid:
      return sigmoid(z);
    case Activation::softmax:
      return softmax_rows(z);
  }
  return z;
}

/// Gradient w.r.t. the pre-activation given the activation output `y`.
template <typename Scalar>
Matrix<Scalar> activation_backward(Activation act, const Matrix<Scalar>& y, const Matrix<Scalar>& dy) {
  switch (act) {
    case Activation::identity:
      return dy;
    case Activation::relu:
      return (y.array() > Scalar(0)).select(dy, Scalar(0));
    case Activation::tanh:
      return (dy.array() * (Scalar(1) - y.array().square())).matrix();
    case Activation::sigmoid:
      return (dy.array() * y.array() * (Scalar(1) - y.array())).matrix();
    case Activation::softmax: {
      Matrix<Scalar> dz(y.rows(), y.cols());
      for (Index i = 0; i < y.rows(); ++i) {
        const Scalar dot = y.row(i).dot(dy.row(i));
        dz.row(i) = (y.row(i).array() * (dy.row(i).array() - dot)).matrix();
      }
      return dz;
    }
  }
  return dy;
}

// ---------------------------------------------------------------------------
// Dense

template <typename Scalar>
struct DenseCache {
  Matrix<Scalar> input;
  Matrix<Scalar> output;
};

template <typename Scalar>
Matrix<Scalar> dense_forward(const Layer<Scalar>& layer, const Matrix<Scalar>& x, DenseCache<Scalar>* cache = nullptr) {
  if (x.cols() != layer.spec.in_dim) {
    throw DimensionError("dense: input has " + std::to_string(x.cols()) + " columns, layer expects " +
                         std::to_string(layer.spec.in_dim));
  }
  Matrix<Scalar> z = x * layer.weights[0];
  z.rowwise() += layer.weights[1].row(0);
  Matrix<Scalar> y = activate(layer.spec.activation, z);
  if (cache) {
    cache->input = x;
    cache->output = y;
  }
  return y;
}

/// Accumulates into `grads` (same layout as layer.weights); returns dL/dx.
template <typename Scalar>
Matrix<Scalar> dense_backward(const Layer<Scalar>& layer, const DenseCache<Scalar>& cache, const Matrix<Scalar>& dy,
                              std::vector<Matrix<Scalar>>& grads) {
  require_shape(dy, cache.output.rows(), cache.output.cols(), "dense upstream gradient");
  const Matrix<Scalar> dz = activation_backward(layer.spec.activation, cache.output, dy);
  grads[0].noalias() += cache.input.transpose() * dz;
  grads[1] += dz.colwise().sum();
  return dz * layer.weights[0].transpose();
}

// ---------------------------------------------------------------------------
// Conv1d over positions (rows), "same" zero padding, channels as columns.

template <typename Scalar>
struct ConvCache {
  Matrix<Scalar> columns;  // L x (kw * in)
  Matrix<Scalar> output;
};

template <typename Scalar>
Matrix<Scalar> im2col(const Matrix<Scalar>& x, Index kernel_width) {
  const Index length = x.rows();
  const Index in = x.cols();
  const Index pad = kernel_width / 2;
  Matrix<Scalar> cols = Matrix<Scalar>::Zero(length, kernel_width * in);
  for (Index i = 0; i < length; ++i) {
    for (Index j = 0; j < kernel_width; ++j) {
      const Index src = i + j - pad;
      if (src >= 0 && src < length) cols.block(i, j * in, 1, in) = x.row(src);
    }
  }
  return cols;
}

template <typename Scalar>
Matrix<Scalar> conv1d_forward(const Layer<Scalar>& layer, const Matrix<Scalar>& x, ConvCache<Scalar>* cache = nullptr) {
  if (x.cols() != layer.spec.in_dim) {
    throw DimensionError("conv1d: input has " + std::to_string(x.cols()) + " channels, layer expects " +
                         std::to_string(layer.spec.in_dim));
  }
  if (x.rows() == 0) throw DomainError("conv1d: empty input sequence");
  Matrix<Scalar> cols = im2col(x, layer.spec.kernel_width);
  Matrix<Scalar> z = cols * layer.weights[0];
  z.rowwise() += layer.weights[1].row(0);
  Matrix<Scalar> y = activate(layer.spec.activation, z);
  if (cache) {
    cache->columns = std::move(cols);
    cache->output = y;
  }
  return y;
}

template <typename Scalar>
Matrix<Scalar> conv1d_backward(const Layer<Scalar>& layer, const ConvCache<Scalar>& cache, const Matrix<Scalar>& dy,
                               std::vector<Matrix<Scalar>>& grads) {
  require_shape(dy, cache.output.rows(), cache.output.cols(), "conv1d upstream gradient");
  const Matrix<Scalar> dz = activation_backward(layer.spec.activation, cache.output, dy);
  grads[0].noalias() += cache.columns.transpose() * dz;
  grads[1] += dz.colwise().sum();
  const Matrix<Scalar> dcols = dz * layer.weights[0].transpose();
  const Index length = dy.rows();
  const Index in = layer.spec.in_dim;
  const Index kw = layer.spec.kernel_width;
  const Index pad = kw / 2;
  Matrix<Scalar> dx = Matrix<Scalar>::Zero(length, in);
  for (Index i = 0; i < length; ++i) {
    for (Index j = 0; j < kw; ++j) {
      const Index src = i + j - pad;
      if (src >= 0 && src < length) dx.row(src) += dcols.block(i, j * in, 1, in);
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Gated recurrent cell
//   z = sigmoid(x Wx_z + bx_z + h Wh_z + bh_z)
//   r = sigmoid(x Wx_r + bx_r + h Wh_r + bh_r)
//   n = tanh(x Wx_n + bx_n + r * (h Wh_n + bh_n))
//   h' = (1 - z) * n + z * h

template <typename Scalar>
struct GruStep {
  RowVector<Scalar> x, h_prev, z, r, n, gh_n;
};

template <typename Scalar>
RowVector<Scalar> gru_step(const Layer<Scalar>& cell, const Eigen::Ref<const RowVector<Scalar>>& x,
                           const RowVector<Scalar>& h_prev, GruStep<Scalar>* record = nullptr) {
  const Index h = cell.spec.out_dim;
  const RowVector<Scalar> gx = x * cell.weights[0] + cell.weights[2];
  const RowVector<Scalar> gh = h_prev * cell.weights[1] + cell.weights[3];
  const auto logistic = [](const auto& v) { return (Scalar(1) / (Scalar(1) + (-v.array()).exp())).matrix(); };
  const RowVector<Scalar> z = logistic(gx.segment(0, h) + gh.segment(0, h));
  const RowVector<Scalar> r = logistic(gx.segment(h, h) + gh.segment(h, h));
  const RowVector<Scalar> gh_n = gh.segment(2 * h, h);
  const RowVector<Scalar> n = (gx.segment(2 * h, h).array() + r.array() * gh_n.array()).tanh().matrix();
  RowVector<Scalar> out = ((Scalar(1) - z.array()) * n.array() + z.array() * h_prev.array()).matrix();
  if (record) *record = {x, h_prev, z, r, n, gh_n};
  return out;
}

template <typename Scalar>
struct GruCache {
  std::vector<GruStep<Scalar>> steps;
};

/// Runs the cell over the rows of `x` starting from a zero state. Returns all hidden states (T x h).
template <typename Scalar>
Matrix<Scalar> gru_forward(const Layer<Scalar>& cell, const Matrix<Scalar>& x, GruCache<Scalar>* cache = nullptr) {
  if (x.rows() == 0) throw DomainError("recurrent: empty input sequence");
  if (x.cols() != cell.spec.in_dim) {
    throw DimensionError("recurrent: input has " + std::to_string(x.cols()) + " columns, cell expects " +
                         std::to_string(cell.spec.in_dim));
  }
  const Index h = cell.spec.out_dim;
  Matrix<Scalar> hiddens(x.rows(), h);
  RowVector<Scalar> state = RowVector<Scalar>::Zero(h);
  if (cache) cache->steps.resize(static_cast<std::size_t>(x.rows()));
  for (Index t = 0; t < x.rows(); ++t) {
    state = gru_step<Scalar>(cell, x.row(t), state, cache ? &cache->steps[static_cast<std::size_t>(t)] : nullptr);
    hiddens.row(t) = state;
  }
  return hiddens;
}

/// Backpropagation through time. `dh` holds dL/dh_t for every step (T x h).
template <typename Scalar>
Matrix<Scalar> gru_backward(const Layer<Scalar>& cell, const GruCache<Scalar>& cache, const Matrix<Scalar>& dh,
                            std::vector<Matrix<Scalar>>& grads) {
  const Index steps = static_cast<Index>(cache.steps.size());
  const Index h = cell.spec.out_dim;
  require_shape(dh, steps, h, "recurrent upstream gradient");
  Matrix<Scalar> dx(steps, cell.spec.in_dim);
  RowVector<Scalar> carry = RowVector<Scalar>::Zero(h);
  RowVector<Scalar> dgx(3 * h);
  RowVector<Scalar> dgh(3 * h);
  for (Index t = steps - 1; t >= 0; --t) {
    const auto& s = cache.steps[static_cast<std::size_t>(t)];
    const RowVector<Scalar> dout = dh.row(t) + carry;
    const auto dn = (dout.array() * (Scalar(1) - s.z.array())).eval();
    const auto dz = (dout.array() * (s.h_prev.array() - s.n.array())).eval();
    const auto dn_pre = (dn * (Scalar(1) - s.n.array().square())).eval();
    const auto dr = (dn_pre * s.gh_n.array()).eval();
    dgx.segment(0, h) = (dz * s.z.array() * (Scalar(1) - s.z.array())).matrix();
    dgx.segment(h, h) = (dr * s.r.array() * (Scalar(1) - s.r.array())).matrix();
    dgx.segment(2 * h, h) = dn_pre.matrix();
    dgh.segment(0, 2 * h) = dgx.segment(0, 2 * h);
    dgh.segment(2 * h, h) = (dn_pre * s.r.array()).matrix();
    grads[0].noalias() += s.x.transpose() * dgx;
    grads[1].noalias() += s.h_prev.transpose() * dgh;
    grads[2] += dgx;
    grads[3] += dgh;
    dx.row(t) = dgx * cell.weights[0].transpose();
    carry = (dout.array() * s.z.array()).matrix() + dgh * cell.weights[1].transpose();
  }
  return dx;
}

template <typename Scalar>
struct RecurrentOutput {
  RowVector<Scalar> final_hidden;
  Matrix<Scalar> all_hiddens;  // one row per input position
};

/// Encodes a sequence (one row per token vector) with a recurrent cell.
template <typename Scalar>
RecurrentOutput<Scalar> recurrent_encode(const Layer<Scalar>& cell, const Matrix<Scalar>& token_vectors,
                                         GruCache<Scalar>* cache = nullptr) {
  Matrix<Scalar> hiddens = gru_forward(cell, token_vectors, cache);
  RowVector<Scalar> last = hiddens.row(hiddens.rows() - 1);
  return {std::move(last), std::move(hiddens)};
}

// ---------------------------------------------------------------------------
// Additive attention pooling: a_i = tanh(h_i W + b), score_i = a_i u, context = sum softmax(score)_i h_i

template <typename Scalar>
struct AttentionCache {
  Matrix<Scalar> hiddens;
  Matrix<Scalar> projected;
  RowVector<Scalar> weights;  // softmax(score), length T
};

template <typename Scalar>
RowVector<Scalar> attention_forward(const Layer<Scalar>& layer, const Matrix<Scalar>& hiddens,
                                    AttentionCache<Scalar>* cache = nullptr) {
  if (hiddens.rows() == 0) throw DomainError("attention_pool: empty input");
  if (hiddens.cols() != layer.spec.in_dim) {
    throw DimensionError("attention_pool: hidden dimension " + std::to_string(hiddens.cols()) + " != " +
                         std::to_string(layer.spec.in_dim));
  }
  Matrix<Scalar> projected = hiddens * layer.weights[0];
  projected.rowwise() += layer.weights[1].row(0);
  projected = projected.array().tanh().matrix();
  const Matrix<Scalar> scores = (projected * layer.weights[2]).transpose();  // 1 x T
  RowVector<Scalar> alpha = softmax_rows(scores).row(0);
  RowVector<Scalar> context = alpha * hiddens;
  if (cache) *cache = {hiddens, std::move(projected), std::move(alpha)};
  return context;
}

template <typename Scalar>
Matrix<Scalar> attention_backward(const Layer<Scalar>& layer, const AttentionCache<Scalar>& cache,
                                  const RowVector<Scalar>& dcontext, std::vector<Matrix<Scalar>>& grads) {
  require_shape(dcontext, 1, cache.hiddens.cols(), "attention upstream gradient");
  const auto& alpha = cache.weights;
  Matrix<Scalar> dh = alpha.transpose() * dcontext;  // T x d
  const RowVector<Scalar> dalpha = (cache.hiddens * dcontext.transpose()).transpose();
  const Scalar mean = alpha.dot(dalpha);
  const RowVector<Scalar> dscore = (alpha.array() * (dalpha.array() - mean)).matrix();
  grads[2].noalias() += cache.projected.transpose() * dscore.transpose();
  const Matrix<Scalar> dproj = dscore.transpose() * layer.weights[2].transpose();  // T x d
  const Matrix<Scalar> dpre = (dproj.array() * (Scalar(1) - cache.projected.array().square())).matrix();
  grads[0].noalias() += cache.hiddens.transpose() * dpre;
  grads[1] += dpre.colwise().sum();
  dh.noalias() += dpre * layer.weights[0].transpose();
  return dh;
}

template <typename Scalar>
RowVector<Scalar> attention_pool(const Layer<Scalar>& layer, const Matrix<Scalar>& hiddens,
                                 AttentionCache<Scalar>* cache = nullptr) {
  return attention_forward(layer, hiddens, cache);
}

}  // namespace rltg::nn
