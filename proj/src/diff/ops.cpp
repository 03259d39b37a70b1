#include "statenet/diff/ops.hpp"

#include <string>

namespace statenet::diff {
namespace {

Index checked_kernel(Index x_rows, Index x_cols, const Index w_rows, Index w_cols, Index bias_rows,
                     Index dilation, Index segment_length) {
  if (dilation < 1) throw std::invalid_argument("dilation must be positive");
  if (segment_length < 1 || x_cols % segment_length != 0) {
    throw ShapeError("causal_conv: input length is not a multiple of the segment length");
  }
  if (x_rows < 1 || w_cols < x_rows || w_cols % x_rows != 0) {
    throw ShapeError("causal_conv: weight has " + std::to_string(w_cols) + " columns for " +
                     std::to_string(x_rows) + " input channels");
  }
  if (bias_rows != w_rows) throw ShapeError("causal_conv: bias size mismatch");
  return w_cols / x_rows;
}

}  // namespace

template <typename T>
Matrix<T> causal_conv(const Eigen::Ref<const Matrix<T>>& x, const Matrix<T>& weight,
                      const Matrix<T>& bias, Index dilation, Index segment_length) {
  const Index in = x.rows();
  const Index out = weight.rows();
  const Index k = checked_kernel(in, x.cols(), out, weight.cols(), bias.rows(), dilation, segment_length);
  const Index segments = x.cols() / segment_length;

  Matrix<T> y(out, x.cols());
  y.colwise() = bias.col(0);
  for (Index j = 0; j < k; ++j) {
    const Index shift = (k - 1 - j) * dilation;
    if (shift >= segment_length) continue;
    const auto tap = weight.middleCols(j * in, in);
    if (shift == 0) {
      y.noalias() += tap * x;
      continue;
    }
    const Index span = segment_length - shift;
    for (Index s = 0; s < segments; ++s) {
      const Index base = s * segment_length;
      y.middleCols(base + shift, span).noalias() += tap * x.middleCols(base, span);
    }
  }
  return y;
}

template <typename T>
void causal_conv_backward(const Eigen::Ref<const Matrix<T>>& x, const Matrix<T>& weight,
                          const Matrix<T>& dy, Index dilation, Index segment_length, Matrix<T>* dx,
                          Matrix<T>& dweight, Matrix<T>& dbias) {
  const Index in = x.rows();
  const Index k = checked_kernel(in, x.cols(), weight.rows(), weight.cols(), dbias.rows(), dilation,
                                 segment_length);
  if (dy.rows() != weight.rows() || dy.cols() != x.cols()) throw ShapeError("causal_conv_backward: dy shape");
  const Index segments = x.cols() / segment_length;

  dbias.col(0) += dy.rowwise().sum();
  if (dx) dx->setZero(in, x.cols());
  for (Index j = 0; j < k; ++j) {
    const Index shift = (k - 1 - j) * dilation;
    if (shift >= segment_length) continue;
    const auto tap = weight.middleCols(j * in, in);
    auto dtap = dweight.middleCols(j * in, in);
    if (shift == 0) {
      dtap.noalias() += dy * x.transpose();
      if (dx) dx->noalias() += tap.transpose() * dy;
      continue;
    }
    const Index span = segment_length - shift;
    for (Index s = 0; s < segments; ++s) {
      const Index base = s * segment_length;
      const auto dy_part = dy.middleCols(base + shift, span);
      dtap.noalias() += dy_part * x.middleCols(base, span).transpose();
      if (dx) dx->middleCols(base, span).noalias() += tap.transpose() * dy_part;
    }
  }
}

template <typename T>
Vector<T> dilated_conv1d(const Vector<T>& x, const Vector<T>& w, Index dilation, T bias) {
  if (w.size() == 0) throw std::invalid_argument("dilated_conv1d: empty kernel");
  if (dilation < 1) throw std::invalid_argument("dilated_conv1d: dilation must be positive");
  if (x.size() == 0) return Vector<T>();
  const Matrix<T> weight = w.transpose();
  const Matrix<T> b = Matrix<T>::Constant(1, 1, bias);
  const Matrix<T> row = x.transpose();
  return causal_conv<T>(row, weight, b, dilation, x.size()).transpose();
}

template Matrix<float> causal_conv(const Eigen::Ref<const Matrix<float>>&, const Matrix<float>&,
                                   const Matrix<float>&, Index, Index);
template Matrix<double> causal_conv(const Eigen::Ref<const Matrix<double>>&, const Matrix<double>&,
                                    const Matrix<double>&, Index, Index);
template void causal_conv_backward(const Eigen::Ref<const Matrix<float>>&, const Matrix<float>&,
                                   const Matrix<float>&, Index, Index, Matrix<float>*,
                                   Matrix<float>&, Matrix<float>&);
template void causal_conv_backward(const Eigen::Ref<const Matrix<double>>&, const Matrix<double>&,
                                   const Matrix<double>&, Index, Index, Matrix<double>*,
                                   Matrix<double>&, Matrix<double>&);
template Vector<float> dilated_conv1d(const Vector<float>&, const Vector<float>&, Index, float);
template Vector<double> dilated_conv1d(const Vector<double>&, const Vector<double>&, Index, double);

}  // namespace statenet::diff
