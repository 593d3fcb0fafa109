#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rltg/errors.hpp"

namespace rltg::nn {

using Index = Eigen::Index;

/// Row-major dense matrix. Rows index batch items or sequence positions.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;
using RowVectorF = RowVector<float>;
using RowVectorD = RowVector<double>;

/// Non-owning named handle to a trainable tensor.
template <typename Scalar>
struct ParamRef {
  std::string name;
  Matrix<Scalar>* value;
};

template <typename Scalar>
using ParamList = std::vector<ParamRef<Scalar>>;

/// Gradients aligned index-for-index with a ParamList.
template <typename Scalar>
using GradList = std::vector<Matrix<Scalar>>;

inline std::string shape_string(Index rows, Index cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

template <typename Derived>
std::string shape_of(const Eigen::DenseBase<Derived>& m) {
  return shape_string(m.rows(), m.cols());
}

template <typename Derived>
void require_shape(const Eigen::DenseBase<Derived>& m, Index rows, Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(what + ": expected " + shape_string(rows, cols) + ", got " + shape_of(m));
  }
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

/// Uniform Xavier/Glorot initialisation: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
template <typename Scalar>
Matrix<Scalar> xavier_uniform(Index rows, Index cols, Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix<Scalar> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(dist(rng));
  return m;
}

template <typename Scalar>
GradList<Scalar> zeros_like(const ParamList<Scalar>& params) {
  GradList<Scalar> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(Matrix<Scalar>::Zero(p.value->rows(), p.value->cols()));
  return out;
}

}  // namespace rltg::nn
