#include "statenet/diff/gru.hpp"

#include <stdexcept>

namespace statenet::diff {
namespace {

template <typename T>
Index check_shapes(Index in, const Matrix<T>& input_weight, const Matrix<T>& hidden_weight,
                   const Matrix<T>& bias) {
  const Index h = hidden_weight.cols();
  if (h <= 0) throw std::invalid_argument("gru: hidden_dim must be positive");
  if (hidden_weight.rows() != 3 * h || input_weight.rows() != 3 * h || input_weight.cols() != in ||
      bias.rows() != 3 * h || bias.cols() != 1) {
    throw ShapeError("gru: parameter shapes do not match input size " + std::to_string(in) +
                     " and hidden size " + std::to_string(h));
  }
  return h;
}

template <typename T>
T logistic(T v) {
  return v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
}

}  // namespace

template <typename T>
Vector<T> gru_forward(const Eigen::Ref<const Matrix<T>>& x, const Matrix<T>& input_weight,
                      const Matrix<T>& hidden_weight, const Matrix<T>& bias, GruTrace<T>* trace) {
  const Index h = check_shapes(x.rows(), input_weight, hidden_weight, bias);
  const Index steps = x.cols();

  Matrix<T> projected = input_weight * x;
  projected.colwise() += bias.col(0);

  if (trace) {
    trace->hidden.setZero(h, steps + 1);
    trace->update.resize(h, steps);
    trace->reset.resize(h, steps);
    trace->candidate.resize(h, steps);
    trace->reset_hidden.resize(h, steps);
  }

  const auto u_zr = hidden_weight.topRows(2 * h);
  const auto u_n = hidden_weight.bottomRows(h);
  Vector<T> state = Vector<T>::Zero(h);
  Vector<T> gates(2 * h), z(h), r(h), n(h), rh(h);
  for (Index t = 0; t < steps; ++t) {
    gates.noalias() = u_zr * state;
    gates += projected.col(t).head(2 * h);
    z = gates.head(h).unaryExpr([](T v) { return logistic(v); });
    r = gates.tail(h).unaryExpr([](T v) { return logistic(v); });
    rh = r.cwiseProduct(state);
    n.noalias() = u_n * rh;
    n = (n + projected.col(t).tail(h)).array().tanh().matrix();
    state = z.cwiseProduct(state) + (Vector<T>::Ones(h) - z).cwiseProduct(n);
    if (trace) {
      trace->update.col(t) = z;
      trace->reset.col(t) = r;
      trace->candidate.col(t) = n;
      trace->reset_hidden.col(t) = rh;
      trace->hidden.col(t + 1) = state;
    }
  }
  return state;
}

template <typename T>
void gru_backward(const Eigen::Ref<const Matrix<T>>& x, const Matrix<T>& input_weight,
                  const Matrix<T>& hidden_weight, const GruTrace<T>& trace, const Vector<T>& dh_last,
                  Matrix<T>& d_input_weight, Matrix<T>& d_hidden_weight, Matrix<T>& d_bias) {
  const Index h = check_shapes(x.rows(), input_weight, hidden_weight, d_bias);
  const Index steps = x.cols();
  if (trace.update.cols() != steps || dh_last.size() != h) throw ShapeError("gru_backward: trace mismatch");

  const auto u_zr = hidden_weight.topRows(2 * h);
  const auto u_n = hidden_weight.bottomRows(h);
  Matrix<T> d_pre(3 * h, steps);  // gradients w.r.t. gate pre-activations
  Vector<T> dh = dh_last;
  Vector<T> da_n(h), drh(h), dz(h), dr(h), da_zr(2 * h);
  for (Index t = steps - 1; t >= 0; --t) {
    const auto z = trace.update.col(t);
    const auto r = trace.reset.col(t);
    const auto n = trace.candidate.col(t);
    const auto prev = trace.hidden.col(t);

    dz = dh.cwiseProduct(prev - n);
    da_n = dh.cwiseProduct(Vector<T>::Ones(h) - z).cwiseProduct((Vector<T>::Ones(h) - n.cwiseAbs2()));
    drh.noalias() = u_n.transpose() * da_n;
    dr = drh.cwiseProduct(prev);
    da_zr.head(h) = dz.cwiseProduct(z.cwiseProduct(Vector<T>::Ones(h) - z));
    da_zr.tail(h) = dr.cwiseProduct(r.cwiseProduct(Vector<T>::Ones(h) - r));

    Vector<T> dh_prev = dh.cwiseProduct(z) + drh.cwiseProduct(r);
    dh_prev.noalias() += u_zr.transpose() * da_zr;
    d_pre.col(t).head(2 * h) = da_zr;
    d_pre.col(t).tail(h) = da_n;
    dh = std::move(dh_prev);
  }

  d_input_weight.noalias() += d_pre * x.transpose();
  d_bias.col(0) += d_pre.rowwise().sum();
  d_hidden_weight.topRows(2 * h).noalias() +=
      d_pre.topRows(2 * h) * trace.hidden.leftCols(steps).transpose();
  d_hidden_weight.bottomRows(h).noalias() += d_pre.bottomRows(h) * trace.reset_hidden.transpose();
}

template Vector<float> gru_forward(const Eigen::Ref<const Matrix<float>>&, const Matrix<float>&,
                                   const Matrix<float>&, const Matrix<float>&, GruTrace<float>*);
template Vector<double> gru_forward(const Eigen::Ref<const Matrix<double>>&, const Matrix<double>&,
                                    const Matrix<double>&, const Matrix<double>&, GruTrace<double>*);
template void gru_backward(const Eigen::Ref<const Matrix<float>>&, const Matrix<float>&,
                           const Matrix<float>&, const GruTrace<float>&, const Vector<float>&,
                           Matrix<float>&, Matrix<float>&, Matrix<float>&);
template void gru_backward(const Eigen::Ref<const Matrix<double>>&, const Matrix<double>&,
                           const Matrix<double>&, const GruTrace<double>&, const Vector<double>&,
                           Matrix<double>&, Matrix<double>&, Matrix<double>&);

}  // namespace statenet::diff
