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

#ifndef LENCTL_AUTODIFF_H_
#define LENCTL_AUTODIFF_H_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "lenctl/random.h"
#include "lenctl/tensor.h"

namespace lenctl {

// Handle to a node on a tape.
struct Var {
  int id = -1;
};

// Records primitive operations in execution order so adjoints can be
// replayed in reverse. Creation order is a topological order, so a single
// reverse sweep visits every node after all of its consumers.
//
// A tape and the tensors it references belong to one thread for the
// duration of a forward/backward pass.
template <typename T>
class BasicTape {
 public:
  using TensorT = BasicTensor<T>;
  using Backprop = std::function<void(BasicTape&)>;

  explicit BasicTape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  BasicTape(const BasicTape&) = delete;
  BasicTape& operator=(const BasicTape&) = delete;

  // Leaf bound to an external parameter. After Backward() the adjoint is
  // accumulated into param.grad() when param.requires_grad().
  Var Param(TensorT& param);
  // Leaf referencing a frozen tensor (no copy, no gradient). The tensor must
  // outlive the tape.
  Var Param(const TensorT& param);
  // Leaf that never receives a gradient.
  Var Constant(TensorT value);
  // Owned leaf; its adjoint is readable through adjoint() after Backward().
  Var Input(TensorT value, bool requires_grad);

  // Appends an op result. backprop is dropped when no input needs a grad.
  Var Record(TensorT value, std::initializer_list<Var> inputs, Backprop backprop);

  const TensorT& value(Var v) const {
    const Node& n = nodes_[v.id];
    return n.external != nullptr ? *n.external : n.value;
  }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  // Adjoint buffer of v; only meaningful during or after Backward().
  std::span<T> adjoint(Var v) { return nodes_[v.id].adjoint; }

  // Reverse sweep from a scalar. Throws std::logic_error on a second call.
  void Backward(Var loss);

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }
  // Number of backprop closures executed by the last Backward().
  std::size_t replayed() const { return replayed_; }

 private:
  struct Node {
    TensorT value;
    std::vector<T> adjoint;
    const TensorT* external = nullptr;
    TensorT* param = nullptr;
    bool needs_grad = false;
    Backprop backprop;
  };

  std::vector<Node> nodes_;
  bool grad_enabled_;
  bool consumed_ = false;
  std::size_t replayed_ = 0;
};

using Tape = BasicTape<float>;
using TapeD = BasicTape<double>;

// Head layout for the fused attention op. Queries are rows of a
// [batch*q_len, d] matrix, keys/values rows of [batch*k_len, d].
struct AttentionShape {
  int batch = 1;
  int q_len = 1;
  int k_len = 1;
  int heads = 1;
  bool causal = false;
};

// a[m x k] * b[k x n]. a may have rank > 2; its leading dims are kept.
template <typename T>
Var MatMul(BasicTape<T>& tape, Var a, Var b);

template <typename T>
Var Add(BasicTape<T>& tape, Var a, Var b);

// x + bias broadcast over rows; bias length equals x.cols().
template <typename T>
Var AddRowVector(BasicTape<T>& tape, Var x, Var bias);

template <typename T>
Var Mul(BasicTape<T>& tape, Var a, Var b);

template <typename T>
Var Scale(BasicTape<T>& tape, Var a, T factor);

template <typename T>
Var Relu(BasicTape<T>& tape, Var a);

// Sum of all elements, shape [1].
template <typename T>
Var Sum(BasicTape<T>& tape, Var a);

// Max-subtracted softmax along axis (negative axis counts from the end).
template <typename T>
Var Softmax(BasicTape<T>& tape, Var x, int axis = -1);

// Row-wise normalization over the last dimension with population variance,
// then gain * x_hat + bias.
template <typename T>
Var LayerNorm(BasicTape<T>& tape, Var x, Var gain, Var bias, T eps = T(1e-5));

// Mean negative log-likelihood over positions whose target != pad_id.
// logits is viewed as [positions x vocab]. Throws when every target is pad.
template <typename T>
Var CrossEntropy(BasicTape<T>& tape, Var logits, std::span<const int> targets,
                 int pad_id);

// Rows of table[vocab x d] selected by ids; result [ids.size() x d].
template <typename T>
Var Embedding(BasicTape<T>& tape, Var table, std::span<const int> ids);

// Scaled dot-product multi-head attention. key_mask has batch*k_len entries,
// nonzero for keys that may be attended. A query row with no admissible key
// yields zeros.
template <typename T>
Var Attention(BasicTape<T>& tape, Var q, Var k, Var v, const AttentionShape& shape,
              std::span<const std::uint8_t> key_mask);

// Inverted dropout; identity when rate == 0 or the tape has grads disabled.
template <typename T>
Var Dropout(BasicTape<T>& tape, Var x, double rate, Rng& rng);

}  // namespace lenctl

#endif  // LENCTL_AUTODIFF_H_
