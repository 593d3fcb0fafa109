#pragma once

#include <cmath>
#include <string>

#include "rltg/nn/network.hpp"

namespace rltg::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Scalar>
struct AdamState {
  std::uint64_t step = 0;
  AdamOptions options;
  GradList<Scalar> first_moment;
  GradList<Scalar> second_moment;
};

template <typename Scalar>
AdamState<Scalar> make_adam(const ParamList<Scalar>& params, AdamOptions options = {}) {
  if (!(options.lr > 0.0)) throw ConfigError("adam: lr must be positive");
  if (!(options.beta1 > 0.0 && options.beta1 < 1.0)) throw ConfigError("adam: beta1 must lie in (0, 1)");
  if (!(options.beta2 > 0.0 && options.beta2 < 1.0)) throw ConfigError("adam: beta2 must lie in (0, 1)");
  AdamState<Scalar> state;
  state.options = options;
  state.first_moment = zeros_like(params);
  state.second_moment = zeros_like(params);
  return state;
}

/// One bias-corrected Adam update. An all-zero gradient only advances the step counter.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, const ParamList<Scalar>& params, const GradList<Scalar>& grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw DimensionError("adam: parameter/gradient/state count mismatch");
  }
  bool any_nonzero = false;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = *params[i].value;
    require_shape(grads[i], p.rows(), p.cols(), "adam gradient for " + params[i].name);
    require_shape(state.first_moment[i], p.rows(), p.cols(), "adam moment for " + params[i].name);
    if (!all_finite(grads[i])) throw TrainingError("adam: non-finite gradient in tensor '" + params[i].name + "'");
    if (!any_nonzero && (grads[i].array() != Scalar(0)).any()) any_nonzero = true;
  }
  ++state.step;
  if (!any_nonzero) return;

  const auto& o = state.options;
  const double t = static_cast<double>(state.step);
  const Scalar b1 = static_cast<Scalar>(o.beta1);
  const Scalar b2 = static_cast<Scalar>(o.beta2);
  const Scalar correction1 = static_cast<Scalar>(1.0 - std::pow(o.beta1, t));
  const Scalar correction2 = static_cast<Scalar>(1.0 - std::pow(o.beta2, t));
  const Scalar lr = static_cast<Scalar>(o.lr);
  const Scalar eps = static_cast<Scalar>(o.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const auto& g = grads[i];
    m = b1 * m + (Scalar(1) - b1) * g;
    v = (b2 * v.array() + (Scalar(1) - b2) * g.array().square()).matrix();
    params[i].value->array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
  }
}

/// Network convenience: steps all layers and invalidates outstanding caches.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, Network<Scalar>& net, const NetworkGradients<Scalar>& grads,
               const std::string& prefix = "") {
  adam_step(state, parameters(net, prefix), grads.flat());
  ++net.revision;
}

}  // namespace rltg::nn
