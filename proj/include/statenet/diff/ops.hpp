#pragma once

#include <cmath>
#include <random>

#include "statenet/core.hpp"

namespace statenet::diff {

// Causal dilated convolution over a batch of independent sequences.
//
// `x` is in x (S * segment_length): S sequences laid side by side, each
// column one time step. `weight` is out x (in * k) with tap j in columns
// [j * in, (j + 1) * in). For every sequence
//
//   y[:, t] = bias + sum_j W_j x[:, t - (k - 1 - j) * dilation]
//
// with samples before the sequence start read as zero, so y has the same
// length as x.
template <typename T>
Matrix<T> causal_conv(const Eigen::Ref<const Matrix<T>>& x, const Matrix<T>& weight,
                      const Matrix<T>& bias, Index dilation, Index segment_length);

// Accumulates dweight and dbias; writes dx when non-null.
template <typename T>
void causal_conv_backward(const Eigen::Ref<const Matrix<T>>& x, const Matrix<T>& weight,
                          const Matrix<T>& dy, Index dilation, Index segment_length, Matrix<T>* dx,
                          Matrix<T>& dweight, Matrix<T>& dbias);

// Single-sequence form: y[t] = bias + sum_j w[j] x[t - (k - 1 - j) d].
template <typename T>
Vector<T> dilated_conv1d(const Vector<T>& x, const Vector<T>& w, Index dilation, T bias);

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

template <typename T>
T sigmoid(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

// Max-shifted softmax of a K-vector.
template <typename T>
Vector<T> softmax(const Vector<T>& z) {
  if (z.size() == 0) throw ShapeError("softmax of an empty vector");
  const Vector<T> e = (z.array() - z.maxCoeff()).exp().matrix();
  return e / e.sum();
}

// Row-wise softmax, each row shifted by its own maximum.
template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& z) {
  Matrix<T> e = (z.colwise() - z.rowwise().maxCoeff()).array().exp().matrix();
  e.array().colwise() /= e.rowwise().sum().array();
  return e;
}

// Given s = softmax(z) and dL/ds, returns dL/dz.
template <typename T>
Vector<T> softmax_backward(const Vector<T>& s, const Vector<T>& ds) {
  return (s.array() * (ds.array() - s.dot(ds))).matrix();
}

template <typename T>
Matrix<T> softmax_rows_backward(const Matrix<T>& s, const Matrix<T>& ds) {
  const Vector<T> inner = (s.array() * ds.array()).rowwise().sum().matrix();
  return (s.array() * (ds.colwise() - inner).array()).matrix();
}

template <typename T>
Vector<T> dense(const Vector<T>& x, const Matrix<T>& weight, const Matrix<T>& bias) {
  if (weight.cols() != x.size() || bias.rows() != weight.rows() || bias.cols() != 1) {
    throw ShapeError("dense: shape mismatch");
  }
  return weight * x + bias;
}

// Glorot-uniform fill drawn in double so that float and double models built
// from one seed hold the same values up to rounding.
template <typename T>
void glorot_uniform(Matrix<T>& m, Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<T>(dist(rng));
  }
}

}  // namespace statenet::diff
