#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "rltg/nn/network.hpp"

namespace rltg::nn {

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  Index worst_entry = -1;
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

/// Compares `analytic` against central differences of `loss` with step `h`, perturbing each
/// entry of every parameter in place (and restoring it).
inline GradientCheckResult gradient_check(const ParamList<double>& params, const GradList<double>& analytic,
                                          const std::function<double()>& loss, double h = 1e-4) {
  if (params.size() != analytic.size()) throw DimensionError("gradient_check: parameter/gradient count mismatch");
  GradientCheckResult result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i].value;
    require_shape(analytic[i], p.rows(), p.cols(), "gradient_check " + params[i].name);
    for (Index k = 0; k < p.size(); ++k) {
      const double saved = p.data()[k];
      p.data()[k] = saved + h;
      const double up = loss();
      p.data()[k] = saved - h;
      const double down = loss();
      p.data()[k] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(analytic[i].data()[k], numeric);
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_tensor = params[i].name;
        result.worst_entry = k;
      }
    }
  }
  return result;
}

/// Scalar loss on a network output plus its gradient w.r.t. that output.
using OutputLoss = std::function<double(const MatrixD& output, MatrixD* d_output)>;

/// Checks backward() of `net` for input `x`; runs at 64-bit precision.
inline GradientCheckResult gradient_check(Network<double>& net, const MatrixD& x, const OutputLoss& loss,
                                          double h = 1e-4) {
  auto fwd = forward(net, x);
  MatrixD d_out;
  loss(fwd.output, &d_out);
  const auto grads = backward(net, fwd.cache, d_out);
  auto params = parameters(net);
  return gradient_check(params, grads.flat(), [&] { return loss(predict(net, x), nullptr); }, h);
}

}  // namespace rltg::nn
