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

#include "lenctl/tensor.h"

#include <algorithm>
#include <functional>
#include <numeric>

namespace lenctl {

std::string ShapeString(const std::vector<int>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

std::size_t Product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int s : shape) {
    if (s <= 0) throw DimensionError("non-positive dimension in shape " + ShapeString(shape));
    n *= static_cast<std::size_t>(s);
  }
  return n;
}

}  // namespace

template <typename T>
BasicTensor<T>::BasicTensor(std::vector<int> shape, T fill)
    : shape_(std::move(shape)), data_(Product(shape_), fill) {}

template <typename T>
BasicTensor<T>::BasicTensor(std::vector<int> shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (Product(shape_) != data_.size()) {
    throw DimensionError("shape " + ShapeString(shape_) + " does not match " +
                         std::to_string(data_.size()) + " elements");
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::Identity(int n) {
  BasicTensor t({n, n});
  for (int i = 0; i < n; ++i) t.at(i, i) = T(1);
  return t;
}

template <typename T>
int BasicTensor<T>::dim(int axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) {
    throw DimensionError("axis out of range for shape " + ShapeString(shape_));
  }
  return shape_[axis];
}

template <typename T>
int BasicTensor<T>::rows() const {
  if (shape_.empty()) return 0;
  return static_cast<int>(data_.size() / shape_.back());
}

template <typename T>
int BasicTensor<T>::cols() const {
  return shape_.empty() ? 0 : shape_.back();
}

template <typename T>
BasicTensor<T> BasicTensor<T>::Reshaped(std::vector<int> shape) const {
  return BasicTensor(std::move(shape), data_);
}

template <typename T>
void BasicTensor<T>::set_requires_grad(bool on) {
  requires_grad_ = on;
  if (on) {
    grad_.assign(data_.size(), T(0));
  } else {
    grad_.clear();
  }
}

template <typename T>
void BasicTensor<T>::ZeroGrad() {
  std::fill(grad_.begin(), grad_.end(), T(0));
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace lenctl
