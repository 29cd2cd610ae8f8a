// Copyright 2026 The lenctl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LENCTL_TENSOR_H_
#define LENCTL_TENSOR_H_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lenctl {

// Raised for shape/dimension mismatches; the message names the shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string ShapeString(const std::vector<int>& shape);

// Dense row-major tensor. Matrix-style ops view it as rows() x cols(),
// where cols() is the last dimension.
template <typename T>
class BasicTensor {
 public:
  BasicTensor() = default;
  explicit BasicTensor(std::vector<int> shape, T fill = T(0));
  BasicTensor(std::vector<int> shape, std::vector<T> data);

  static BasicTensor Identity(int n);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const;
  std::size_t size() const { return data_.size(); }
  int rows() const;
  int cols() const;

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* ptr() { return data_.data(); }
  const T* ptr() const { return data_.data(); }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols() + c]; }
  const T& at(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols() + c];
  }

  // Same data, new shape with equal element count.
  BasicTensor Reshaped(std::vector<int> shape) const;

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on);

  // Gradient buffer; empty unless requires_grad. Same length as data.
  std::span<T> grad() { return grad_; }
  std::span<const T> grad() const { return grad_; }
  bool has_grad() const { return !grad_.empty(); }
  void ZeroGrad();

  bool operator==(const BasicTensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  std::vector<int> shape_;
  std::vector<T> data_;
  std::vector<T> grad_;
  bool requires_grad_ = false;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace lenctl

#endif  // LENCTL_TENSOR_H_
