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

#include "lenctl/autodiff.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace lenctl {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
// Column block of a row-major matrix (one attention head).
template <typename T>
using HeadMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstHeadMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

void RequireSameShape(const char* op, const std::vector<int>& a,
                      const std::vector<int>& b) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": shape mismatch " + ShapeString(a) +
                         " vs " + ShapeString(b));
  }
}

}  // namespace

template <typename T>
Var BasicTape<T>::Param(TensorT& param) {
  Node node;
  node.external = &param;
  node.param = &param;
  node.needs_grad = grad_enabled_ && param.requires_grad();
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var BasicTape<T>::Param(const TensorT& param) {
  Node node;
  node.external = &param;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var BasicTape<T>::Constant(TensorT value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var BasicTape<T>::Input(TensorT value, bool requires_grad) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = grad_enabled_ && requires_grad;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var BasicTape<T>::Record(TensorT value, std::initializer_list<Var> inputs,
                         Backprop backprop) {
  Node node;
  node.value = std::move(value);
  if (grad_enabled_) {
    for (Var in : inputs) node.needs_grad = node.needs_grad || nodes_[in.id].needs_grad;
  }
  if (node.needs_grad) node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
void BasicTape<T>::Backward(Var loss) {
  if (consumed_) throw std::logic_error("backward called twice without a new forward pass");
  if (loss.id < 0 || loss.id >= static_cast<int>(nodes_.size())) {
    throw std::out_of_range("backward: unknown node");
  }
  if (value(loss).size() != 1) {
    throw DimensionError("backward: loss must be a scalar, got " +
                         ShapeString(value(loss).shape()));
  }
  consumed_ = true;
  for (Node& node : nodes_) {
    if (node.needs_grad) {
      node.adjoint.assign(node.external ? node.external->size() : node.value.size(), T(0));
    }
  }
  if (!nodes_[loss.id].needs_grad) return;
  nodes_[loss.id].adjoint[0] = T(1);
  replayed_ = 0;
  for (int i = loss.id; i >= 0; --i) {
    Node& node = nodes_[i];
    if (!node.needs_grad) continue;
    if (node.backprop) {
      node.backprop(*this);
      ++replayed_;
    } else if (node.param != nullptr) {
      auto grad = node.param->grad();
      for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += node.adjoint[j];
    }
  }
}

template <typename T>
Var MatMul(BasicTape<T>& tape, Var a, Var b) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  if (bv.rank() != 2 || av.rank() < 2 || av.cols() != bv.dim(0)) {
    throw DimensionError("matmul: inner dimensions differ: " + ShapeString(av.shape()) +
                         " vs " + ShapeString(bv.shape()));
  }
  const int m = av.rows();
  const int k = av.cols();
  const int n = bv.cols();
  std::vector<int> shape = av.shape();
  shape.back() = n;
  BasicTensor<T> out(shape);
  MatMap<T>(out.ptr(), m, n).noalias() =
      ConstMatMap<T>(av.ptr(), m, k) * ConstMatMap<T>(bv.ptr(), k, n);
  Var c{static_cast<int>(tape.size())};
  return tape.Record(std::move(out), {a, b}, [a, b, c, m, k, n](BasicTape<T>& t) {
    ConstMatMap<T> dc(t.adjoint(c).data(), m, n);
    if (t.needs_grad(a)) {
      MatMap<T>(t.adjoint(a).data(), m, k).noalias() +=
          dc * ConstMatMap<T>(t.value(b).ptr(), k, n).transpose();
    }
    if (t.needs_grad(b)) {
      MatMap<T>(t.adjoint(b).data(), k, n).noalias() +=
          ConstMatMap<T>(t.value(a).ptr(), m, k).transpose() * dc;
    }
  });
}

template <typename T>
Var Add(BasicTape<T>& tape, Var a, Var b) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  RequireSameShape("add", av.shape(), bv.shape());
  BasicTensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  Var c{static_cast<int>(tape.size())};
  return tape.Record(std::move(out), {a, b}, [a, b, c](BasicTape<T>& t) {
    auto dc = t.adjoint(c);
    for (Var in : {a, b}) {
      if (!t.needs_grad(in)) continue;
      auto d = t.adjoint(in);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += dc[i];
    }
  });
}

template <typename T>
Var AddRowVector(BasicTape<T>& tape, Var x, Var bias) {
  const auto& xv = tape.value(x);
  const auto& bv = tape.value(bias);
  if (static_cast<int>(bv.size()) != xv.cols()) {
    throw DimensionError("add_row_vector: bias " + ShapeString(bv.shape()) +
                         " does not match rows of " + ShapeString(xv.shape()));
  }
  const int rows = xv.rows();
  const int cols = xv.cols();
  BasicTensor<T> out(xv.shape());
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < cols; ++j) out.at(r, j) = xv.at(r, j) + bv[j];
  }
  Var c{static_cast<int>(tape.size())};
  return tape.Record(std::move(out), {x, bias}, [x, bias, c, rows, cols](BasicTape<T>& t) {
    auto dc = t.adjoint(c);
    if (t.needs_grad(x)) {
      auto dx = t.adjoint(x);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dc[i];
    }
    if (t.needs_grad(bias)) {
      auto db = t.adjoint(bias);
      for (int r = 0; r < rows; ++r) {
        for (int j = 0; j < cols; ++j) db[j] += dc[static_cast<std::size_t>(r) * cols + j];
      }
    }
  });
}

template <typename T>
Var Mul(BasicTape<T>& tape, Var a, Var b) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  RequireSameShape("mul", av.shape(), bv.shape());
  BasicTensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  Var c{static_cast<int>(tape.size())};
  return tape.Record(std::move(out), {a, b}, [a, b, c](BasicTape<T>& t) {
    auto dc = t.adjoint(c);
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    if (t.needs_grad(a)) {
      auto da = t.adjoint(a);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += dc[i] * bv[i];
    }
    if (t.needs_grad(b)) {
      auto db = t.adjoint(b);
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += dc[i] * av[i];
    }
  });
}

template <typename T>
Var Scale(BasicTape<T>& tape, Var a, T factor) {
  const auto& av = tape.value(a);
  BasicTensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  Var c{static_cast<int>(tape.size())};
  return tape.Record(std::move(out), {a}, [a, c, factor](BasicTape<T>& t) {
    auto dc = t.adjoint(c);
    auto da = t.adjoint(a);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += dc[i] * factor;
  });
}

template <typename T>
Var Relu(BasicTape<T>& tape, Var a) {
  const auto& av = tape.value(a);
  BasicTensor<T> out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > T(0) ? av[i] : T(0);
  Var c{static_cast<int>(tape.size())};
  return tape.Record(std::move(out), {a}, [a, c](BasicTape<T>& t) {
    auto dc = t.adjoint(c);
    auto da = t.adjoint(a);
    const auto& av = t.value(a);
    for (std::size_t i = 0; i < da.size(); ++i) {
      if (av[i] > T(0)) da[i] += dc[i];
    }
  });
}

template <typename T>
Var Sum(BasicTape<T>& tape, Var a) {
  const auto& av = tape.value(a);
  double total = 0.0;
  for (T x : av.data()) total += x;
  Var c{static_cast<int>(tape.size())};
  return tape.Record(BasicTensor<T>({1}, static_cast<T>(total)), {a}, [a, c](BasicTape<T>& t) {
    const T g = t.adjoint(c)[0];
    for (T& d : t.adjoint(a)) d += g;
  });
}

template <typename T>
Var Softmax(BasicTape<T>& tape, Var x, int axis) {
  const auto& xv = tape.value(x);
  if (axis < 0) axis += xv.rank();
  if (axis < 0 || axis >= xv.rank()) {
    throw DimensionError("softmax: axis out of range for " + ShapeString(xv.shape()));
  }
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (int i = 0; i < axis; ++i) outer *= xv.shape()[i];
  for (int i = axis + 1; i < xv.rank(); ++i) inner *= xv.shape()[i];
  const std::size_t n = xv.shape()[axis];

  BasicTensor<T> out(xv.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      T max = xv[base];
      for (std::size_t j = 1; j < n; ++j) max = std::max(max, xv[base + j * inner]);
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const T e = std::exp(xv[base + j * inner] - max);
        out[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < n; ++j) {
        out[base + j * inner] = static_cast<T>(out[base + j * inner] / total);
      }
    }
  }
  Var c{static_cast<int>(tape.size())};
  return tape.Record(std::move(out), {x}, [x, c, outer, inner, n](BasicTape<T>& t) {
    const auto& y = t.value(c);
    auto dy = t.adjoint(c);
    auto dx = t.adjoint(x);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          dot += static_cast<double>(y[base + j * inner]) * dy[base + j * inner];
        }
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t idx = base + j * inner;
          dx[idx] += static_cast<T>(y[idx] * (dy[idx] - dot));
        }
      }
    }
  });
}

template <typename T>
Var LayerNorm(BasicTape<T>& tape, Var x, Var gain, Var bias, T eps) {
  const auto& xv = tape.value(x);
  const auto& gv = tape.value(gain);
  const auto& bv = tape.value(bias);
  const int rows = xv.rows();
  const int cols = xv.cols();
  if (static_cast<int>(gv.size()) != cols || static_cast<int>(bv.size()) != cols) {
    throw DimensionError("layer_norm: gain " + ShapeString(gv.shape()) + " / bias " +
                         ShapeString(bv.shape()) + " vs input " + ShapeString(xv.shape()));
  }
  auto normalized = std::make_shared<std::vector<T>>(xv.size());
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  BasicTensor<T> out(xv.shape());
  for (int r = 0; r < rows; ++r) {
    const T* row = xv.ptr() + static_cast<std::size_t>(r) * cols;
    double mean = 0.0;
    for (int j = 0; j < cols; ++j) mean += row[j];
    mean /= cols;
    double var = 0.0;
    for (int j = 0; j < cols; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= cols;
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = static_cast<T>(inv);
    for (int j = 0; j < cols; ++j) {
      const T xhat = static_cast<T>((row[j] - mean) * inv);
      (*normalized)[static_cast<std::size_t>(r) * cols + j] = xhat;
      out.at(r, j) = gv[j] * xhat + bv[j];
    }
  }
  Var c{static_cast<int>(tape.size())};
  return tape.Record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, c, rows, cols, normalized, inv_std](BasicTape<T>& t) {
        auto dy = t.adjoint(c);
        const auto& gv = t.value(gain);
        const std::vector<T>& xhat = *normalized;
        if (t.needs_grad(gain) || t.needs_grad(bias)) {
          for (int r = 0; r < rows; ++r) {
            for (int j = 0; j < cols; ++j) {
              const std::size_t idx = static_cast<std::size_t>(r) * cols + j;
              if (t.needs_grad(gain)) t.adjoint(gain)[j] += dy[idx] * xhat[idx];
              if (t.needs_grad(bias)) t.adjoint(bias)[j] += dy[idx];
            }
          }
        }
        if (!t.needs_grad(x)) return;
        auto dx = t.adjoint(x);
        for (int r = 0; r < rows; ++r) {
          const std::size_t base = static_cast<std::size_t>(r) * cols;
          double mean_g = 0.0;
          double mean_gx = 0.0;
          for (int j = 0; j < cols; ++j) {
            const double g = static_cast<double>(dy[base + j]) * gv[j];
            mean_g += g;
            mean_gx += g * xhat[base + j];
          }
          mean_g /= cols;
          mean_gx /= cols;
          const double inv = (*inv_std)[r];
          for (int j = 0; j < cols; ++j) {
            const double g = static_cast<double>(dy[base + j]) * gv[j];
            dx[base + j] += static_cast<T>(inv * (g - mean_g - xhat[base + j] * mean_gx));
          }
        }
      });
}

template <typename T>
Var CrossEntropy(BasicTape<T>& tape, Var logits, std::span<const int> targets, int pad_id) {
  const auto& lv = tape.value(logits);
  const int rows = lv.rows();
  const int vocab = lv.cols();
  if (static_cast<int>(targets.size()) != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets for logits " + ShapeString(lv.shape()));
  }
  auto probs = std::make_shared<std::vector<T>>(lv.size(), T(0));
  auto ids = std::make_shared<std::vector<int>>(targets.begin(), targets.end());
  double total = 0.0;
  int count = 0;
  for (int r = 0; r < rows; ++r) {
    const int target = targets[r];
    if (target == pad_id) continue;
    if (target < 0 || target >= vocab) {
      throw std::out_of_range("cross_entropy: target id " + std::to_string(target) +
                              " outside vocabulary of " + std::to_string(vocab));
    }
    const T* row = lv.ptr() + static_cast<std::size_t>(r) * vocab;
    double max = row[0];
    for (int j = 1; j < vocab; ++j) max = std::max<double>(max, row[j]);
    double z = 0.0;
    for (int j = 0; j < vocab; ++j) z += std::exp(row[j] - max);
    const double lse = max + std::log(z);
    total += lse - row[target];
    for (int j = 0; j < vocab; ++j) {
      (*probs)[static_cast<std::size_t>(r) * vocab + j] = static_cast<T>(std::exp(row[j] - lse));
    }
    ++count;
  }
  if (count == 0) throw std::invalid_argument("cross_entropy: empty loss (all targets are pad)");
  Var c{static_cast<int>(tape.size())};
  return tape.Record(
      BasicTensor<T>({1}, static_cast<T>(total / count)), {logits},
      [logits, c, rows, vocab, probs, ids, count, pad_id](BasicTape<T>& t) {
        const double g = t.adjoint(c)[0] / static_cast<double>(count);
        auto dl = t.adjoint(logits);
        for (int r = 0; r < rows; ++r) {
          const int target = (*ids)[r];
          if (target == pad_id) continue;
          const std::size_t base = static_cast<std::size_t>(r) * vocab;
          for (int j = 0; j < vocab; ++j) {
            const double p = (*probs)[base + j] - (j == target ? 1.0 : 0.0);
            dl[base + j] += static_cast<T>(g * p);
          }
        }
      });
}

template <typename T>
Var Embedding(BasicTape<T>& tape, Var table, std::span<const int> ids) {
  const auto& tv = tape.value(table);
  const int vocab = tv.rows();
  const int d = tv.cols();
  BasicTensor<T> out({static_cast<int>(ids.size()), d});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= vocab) {
      throw std::out_of_range("embedding: id " + std::to_string(ids[r]) +
                              " outside table of " + std::to_string(vocab) + " rows");
    }
    std::copy_n(tv.ptr() + static_cast<std::size_t>(ids[r]) * d, d, out.ptr() + r * d);
  }
  auto rows = std::make_shared<std::vector<int>>(ids.begin(), ids.end());
  Var c{static_cast<int>(tape.size())};
  return tape.Record(std::move(out), {table}, [table, c, d, rows](BasicTape<T>& t) {
    auto dc = t.adjoint(c);
    auto dt = t.adjoint(table);
    for (std::size_t r = 0; r < rows->size(); ++r) {
      T* dst = dt.data() + static_cast<std::size_t>((*rows)[r]) * d;
      const T* src = dc.data() + r * d;
      for (int j = 0; j < d; ++j) dst[j] += src[j];
    }
  });
}

template <typename T>
Var Attention(BasicTape<T>& tape, Var q, Var k, Var v, const AttentionShape& shape,
              std::span<const std::uint8_t> key_mask) {
  const auto& qv = tape.value(q);
  const auto& kv = tape.value(k);
  const auto& vv = tape.value(v);
  const int d = qv.cols();
  const int heads = shape.heads;
  if (heads <= 0 || d % heads != 0) {
    throw DimensionError("attention: width " + std::to_string(d) + " not divisible by " +
                         std::to_string(heads) + " heads");
  }
  if (qv.rows() != shape.batch * shape.q_len || kv.rows() != shape.batch * shape.k_len ||
      vv.rows() != kv.rows() || kv.cols() != d || vv.cols() != d) {
    throw DimensionError("attention: q " + ShapeString(qv.shape()) + ", k " +
                         ShapeString(kv.shape()) + ", v " + ShapeString(vv.shape()) +
                         " inconsistent with batch " + std::to_string(shape.batch));
  }
  if (key_mask.size() != static_cast<std::size_t>(shape.batch * shape.k_len)) {
    throw DimensionError("attention: key mask has " + std::to_string(key_mask.size()) +
                         " entries, expected " + std::to_string(shape.batch * shape.k_len));
  }
  const int dh = d / heads;
  const int tq = shape.q_len;
  const int tk = shape.k_len;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  const std::size_t block = static_cast<std::size_t>(tq) * tk;
  auto probs =
      std::make_shared<std::vector<T>>(static_cast<std::size_t>(shape.batch) * heads * block);
  BasicTensor<T> out({shape.batch * tq, d});
  RowMat<T> scores(tq, tk);
  for (int b = 0; b < shape.batch; ++b) {
    const std::uint8_t* mask = key_mask.data() + static_cast<std::size_t>(b) * tk;
    for (int h = 0; h < heads; ++h) {
      ConstHeadMap<T> qh(qv.ptr() + static_cast<std::size_t>(b) * tq * d + h * dh, tq, dh,
                         Eigen::OuterStride<>(d));
      ConstHeadMap<T> kh(kv.ptr() + static_cast<std::size_t>(b) * tk * d + h * dh, tk, dh,
                         Eigen::OuterStride<>(d));
      ConstHeadMap<T> vh(vv.ptr() + static_cast<std::size_t>(b) * tk * d + h * dh, tk, dh,
                         Eigen::OuterStride<>(d));
      scores.noalias() = qh * kh.transpose();
      MatMap<T> p(probs->data() + (static_cast<std::size_t>(b) * heads + h) * block, tq, tk);
      for (int i = 0; i < tq; ++i) {
        T max = -std::numeric_limits<T>::infinity();
        for (int j = 0; j < tk; ++j) {
          const bool open = mask[j] && !(shape.causal && j > i);
          if (open) max = std::max(max, scores(i, j) * scale);
        }
        if (max == -std::numeric_limits<T>::infinity()) {
          p.row(i).setZero();
          continue;
        }
        double total = 0.0;
        for (int j = 0; j < tk; ++j) {
          const bool open = mask[j] && !(shape.causal && j > i);
          const T e = open ? std::exp(scores(i, j) * scale - max) : T(0);
          p(i, j) = e;
          total += e;
        }
        for (int j = 0; j < tk; ++j) p(i, j) = static_cast<T>(p(i, j) / total);
      }
      HeadMap<T>(out.ptr() + static_cast<std::size_t>(b) * tq * d + h * dh, tq, dh,
                 Eigen::OuterStride<>(d))
          .noalias() = p * vh;
    }
  }
  Var c{static_cast<int>(tape.size())};
  const int batch = shape.batch;
  return tape.Record(
      std::move(out), {q, k, v},
      [q, k, v, c, batch, heads, tq, tk, d, dh, scale, block, probs](BasicTape<T>& t) {
        const auto& qv = t.value(q);
        const auto& kv = t.value(k);
        const auto& vv = t.value(v);
        const bool gq = t.needs_grad(q);
        const bool gk = t.needs_grad(k);
        const bool gv = t.needs_grad(v);
        RowMat<T> dp(tq, tk);
        for (int b = 0; b < batch; ++b) {
          const std::size_t qoff = static_cast<std::size_t>(b) * tq * d;
          const std::size_t koff = static_cast<std::size_t>(b) * tk * d;
          for (int h = 0; h < heads; ++h) {
            ConstMatMap<T> p(probs->data() + (static_cast<std::size_t>(b) * heads + h) * block,
                             tq, tk);
            ConstHeadMap<T> dout(t.adjoint(c).data() + qoff + h * dh, tq, dh,
                                 Eigen::OuterStride<>(d));
            ConstHeadMap<T> vh(vv.ptr() + koff + h * dh, tk, dh, Eigen::OuterStride<>(d));
            if (gv) {
              HeadMap<T>(t.adjoint(v).data() + koff + h * dh, tk, dh, Eigen::OuterStride<>(d))
                  .noalias() += p.transpose() * dout;
            }
            if (!gq && !gk) continue;
            dp.noalias() = dout * vh.transpose();
            for (int i = 0; i < tq; ++i) {
              T dot = 0;
              for (int j = 0; j < tk; ++j) dot += dp(i, j) * p(i, j);
              for (int j = 0; j < tk; ++j) dp(i, j) = p(i, j) * (dp(i, j) - dot) * scale;
            }
            if (gq) {
              ConstHeadMap<T> kh(kv.ptr() + koff + h * dh, tk, dh, Eigen::OuterStride<>(d));
              HeadMap<T>(t.adjoint(q).data() + qoff + h * dh, tq, dh, Eigen::OuterStride<>(d))
                  .noalias() += dp * kh;
            }
            if (gk) {
              ConstHeadMap<T> qh(qv.ptr() + qoff + h * dh, tq, dh, Eigen::OuterStride<>(d));
              HeadMap<T>(t.adjoint(k).data() + koff + h * dh, tk, dh, Eigen::OuterStride<>(d))
                  .noalias() += dp.transpose() * qh;
            }
          }
        }
      });
}

template <typename T>
Var Dropout(BasicTape<T>& tape, Var x, double rate, Rng& rng) {
  if (rate <= 0.0 || !tape.grad_enabled()) return x;
  if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
  const auto& xv = tape.value(x);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  auto mask = std::make_shared<std::vector<T>>(xv.size());
  BasicTensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    (*mask)[i] = rng.Uniform() < rate ? T(0) : keep_scale;
    out[i] = xv[i] * (*mask)[i];
  }
  Var c{static_cast<int>(tape.size())};
  return tape.Record(std::move(out), {x}, [x, c, mask](BasicTape<T>& t) {
    auto dc = t.adjoint(c);
    auto dx = t.adjoint(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dc[i] * (*mask)[i];
  });
}

#define LENCTL_INSTANTIATE(T)                                                          \
  template class BasicTape<T>;                                                         \
  template Var MatMul(BasicTape<T>&, Var, Var);                                        \
  template Var Add(BasicTape<T>&, Var, Var);                                           \
  template Var AddRowVector(BasicTape<T>&, Var, Var);                                  \
  template Var Mul(BasicTape<T>&, Var, Var);                                           \
  template Var Scale(BasicTape<T>&, Var, T);                                           \
  template Var Relu(BasicTape<T>&, Var);                                               \
  template Var Sum(BasicTape<T>&, Var);                                                \
  template Var Softmax(BasicTape<T>&, Var, int);                                       \
  template Var LayerNorm(BasicTape<T>&, Var, Var, Var, T);                             \
  template Var CrossEntropy(BasicTape<T>&, Var, std::span<const int>, int);            \
  template Var Embedding(BasicTape<T>&, Var, std::span<const int>);                    \
  template Var Attention(BasicTape<T>&, Var, Var, Var, const AttentionShape&,          \
                         std::span<const std::uint8_t>);                               \
  template Var Dropout(BasicTape<T>&, Var, double, Rng&);

LENCTL_INSTANTIATE(float)
LENCTL_INSTANTIATE(double)

#undef LENCTL_INSTANTIATE

}  // namespace lenctl
