#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "statenet/core.hpp"

namespace statenet::diff {

// A named learnable tensor with its gradient slot. Every tensor is stored as
// a rows x cols matrix; vectors are n x 1.
template <typename T>
struct Param {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
  bool trainable = true;

  std::vector<Index> shape() const { return {value.rows(), value.cols()}; }
};

template <typename T>
class ParamSet {
 public:
  using Scalar = T;

  // Adds a zero-initialised tensor and returns its index.
  Index add(const std::string& name, Index rows, Index cols, bool trainable = true) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter name " + name);
    Param<T> p{name, Matrix<T>::Zero(rows, cols), Matrix<T>::Zero(rows, cols), trainable};
    index_.emplace(name, size());
    params_.push_back(std::move(p));
    return size() - 1;
  }

  Index size() const { return static_cast<Index>(params_.size()); }

  Param<T>& operator[](Index i) { return params_[static_cast<std::size_t>(i)]; }
  const Param<T>& operator[](Index i) const { return params_[static_cast<std::size_t>(i)]; }

  Matrix<T>& value(Index i) { return (*this)[i].value; }
  const Matrix<T>& value(Index i) const { return (*this)[i].value; }
  Matrix<T>& grad(Index i) { return (*this)[i].grad; }

  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  Index index_of(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second;
  }

  Param<T>& at(const std::string& name) { return (*this)[index_of(name)]; }
  const Param<T>& at(const std::string& name) const { return (*this)[index_of(name)]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad() {
    for (auto& p : params_) p.grad.setZero();
  }

  void set_trainable(bool trainable) {
    for (auto& p : params_) p.trainable = trainable;
  }

  // Sum of squared entries, accumulated in double.
  double squared_norm(bool trainable_only = true) const {
    double total = 0.0;
    for (const auto& p : params_) {
      if (trainable_only && !p.trainable) continue;
      total += p.value.template cast<double>().squaredNorm();
    }
    return total;
  }

  Index element_count() const {
    Index n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& p : params_) {
      const Index i = out.add(p.name, p.value.rows(), p.value.cols(), p.trainable);
      out.value(i) = p.value.template cast<U>();
    }
    return out;
  }

  // Same names and shapes, in the same order.
  template <typename U>
  bool same_layout(const ParamSet<U>& other) const {
    if (size() != other.size()) return false;
    for (Index i = 0; i < size(); ++i) {
      if ((*this)[i].name != other[i].name || (*this)[i].shape() != other[i].shape()) return false;
    }
    return true;
  }

 private:
  std::vector<Param<T>> params_;
  std::map<std::string, Index> index_;
};

}  // namespace statenet::diff
