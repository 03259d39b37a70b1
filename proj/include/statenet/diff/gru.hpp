#pragma once

#include "statenet/core.hpp"

namespace statenet::diff {

// Gated recurrent unit, Cho et al. formulation, hidden state starting at 0:
//
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   n = tanh(Wn x + Un (r * h) + bn)
//   h' = z * h + (1 - z) * n
//
// Weights are stacked in [z; r; n] order: input_weight is 3H x in,
// hidden_weight is 3H x H and bias is 3H x 1.
template <typename T>
struct GruTrace {
  Matrix<T> hidden;        // H x (L + 1), column 0 is the initial state
  Matrix<T> update;        // H x L
  Matrix<T> reset;         // H x L
  Matrix<T> candidate;     // H x L
  Matrix<T> reset_hidden;  // H x L, r * h_prev
};

// x is in x L, one column per step. Returns the final hidden state.
template <typename T>
Vector<T> gru_forward(const Eigen::Ref<const Matrix<T>>& x, const Matrix<T>& input_weight,
                      const Matrix<T>& hidden_weight, const Matrix<T>& bias,
                      GruTrace<T>* trace = nullptr);

// Accumulates parameter gradients for dL/dh_L = dh_last.
template <typename T>
void gru_backward(const Eigen::Ref<const Matrix<T>>& x, const Matrix<T>& input_weight,
                  const Matrix<T>& hidden_weight, const GruTrace<T>& trace, const Vector<T>& dh_last,
                  Matrix<T>& d_input_weight, Matrix<T>& d_hidden_weight, Matrix<T>& d_bias);

}  // namespace statenet::diff
