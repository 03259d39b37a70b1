#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace statenet {

using Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

// Multichannel signal, C x L. Each channel is one contiguous row, which is
// also the on-disk layout.
template <typename Scalar>
using Signal = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Input shape disagrees with what a model or operation was built for.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent data on disk.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// AUROC/AUPRC requested on labels for which the metric has no value.
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Model architecture is tied to the channel count it was trained on.
class NotTransferable : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Writes a single warning line to stderr.
void warn(const std::string& message);

}  // namespace statenet
