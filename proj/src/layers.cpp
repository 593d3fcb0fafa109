#include "rltg/nn/layers.hpp"

namespace rltg::nn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense:
      return "dense";
    case LayerKind::conv1d:
      return "conv1d";
    case LayerKind::recurrent:
      return "recurrent";
    case LayerKind::attention_pool:
      return "attention-pool";
  }
  return "?";
}

std::string to_string(Activation act) {
  switch (act) {
    case Activation::identity:
      return "identity";
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::softmax:
      return "softmax";
  }
  return "?";
}

void LayerSpec::validate() const {
  if (in_dim < 1 || out_dim < 1) throw ConfigError(to_string(kind) + " layer dimensions must be >= 1");
  if (kind == LayerKind::conv1d && (kernel_width < 1 || kernel_width % 2 == 0)) {
    throw ConfigError("conv1d kernel_width must be odd and >= 1");
  }
  if ((kind == LayerKind::recurrent || kind == LayerKind::attention_pool) && activation != Activation::identity) {
    throw ConfigError(to_string(kind) + " layers take no output activation");
  }
  if (kind == LayerKind::attention_pool && in_dim != out_dim) {
    throw ConfigError("attention-pool preserves dimension: in_dim must equal out_dim");
  }
}

const std::vector<std::string>& weight_names(LayerKind kind) {
  static const std::vector<std::string> affine{"W", "b"};
  static const std::vector<std::string> gru{"Wx", "Wh", "bx", "bh"};
  static const std::vector<std::string> attention{"W", "b", "u"};
  switch (kind) {
    case LayerKind::dense:
    case LayerKind::conv1d:
      return affine;
    case LayerKind::recurrent:
      return gru;
    case LayerKind::attention_pool:
      return attention;
  }
  return affine;
}

}  // namespace rltg::nn
