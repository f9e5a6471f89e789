// Copyright 2026 The TAAF-SNN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Tape-based reverse-mode differentiation over dense tensors.
//
// A Tape records one forward pass. Every op appends a node holding its output
// value, its parent node ids (always smaller than its own id, so insertion
// order is a topological order) and a closure that maps the node's output
// gradient onto its parents. backward() seeds the scalar root with 1 and
// walks the nodes once in reverse insertion order.
//
// A Tape is not thread-safe; confine it to one worker for the whole
// forward/backward pass.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "taaf/tensor.hpp"

namespace taaf {

// Trainable tensor owned by a model. grad is filled by Tape::export_grads.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
  void zero_grad() { grad = Tensor(value.shape()); }
};

enum class OpKind {
  kLeaf,
  kConstant,
  kMatMul,
  kBatchedMatMul,
  kTransposeLast,
  kSoftmax,
  kLogSoftmax,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kTanh,
  kLog,
  kExp,
  kRelu,
  kSquare,
  kSum,
  kMean,
  kSumAll,
  kMeanAll,
  kConcat,
  kSlice,
  kReshape,
  kIdentity,
  kSpike,
  kConv1d,
  kTemporalConv,
};

const char* op_name(OpKind kind);

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  // Gradient accumulated by the last backward(); zeros if the node was not
  // reached.
  Tensor grad() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::vector<std::size_t> parents;
    Tensor value;
    Tensor grad;  // empty (shape [0]) until something accumulates into it
    bool requires_grad = false;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value);
  // Leaf for a model parameter. Binding the same parameter twice returns the
  // same node, so shared weights accumulate into one gradient.
  Var bind(Parameter& param);

  // Appends an op node. requires_grad is inherited from the parents; the
  // closure is dropped when no parent needs a gradient.
  Var record(OpKind kind, Tensor value, std::vector<std::size_t> parents, BackwardFn fn);

  // Reverse sweep from a scalar root. Clears gradients from any earlier sweep.
  void backward(const Var& root);

  // Adds every bound parameter's leaf gradient into Parameter::grad.
  void export_grads() const;

  const Node& node(std::size_t id) const { return nodes_.at(id); }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient of node id; zeros of the value's shape when never reached.
  Tensor grad(std::size_t id) const;
  // Output gradient of the node currently being processed by backward.
  const Tensor& out_grad(std::size_t id) const { return nodes_[id].grad; }

  // grad[id] += g. No-op for nodes that do not require a gradient.
  void accumulate(std::size_t id, const Tensor& g);
  // grad[id] += g, with g given as raw data of the node's shape.
  void accumulate(std::size_t id, std::vector<double>&& g);

  std::size_t size() const { return nodes_.size(); }
  // Number of nodes whose closure ran in the last backward().
  std::size_t last_backward_visits() const { return last_visits_; }

 private:
  std::deque<Node> nodes_;  // deque: value() references survive growth
  std::vector<std::pair<Parameter*, std::size_t>> bound_;
  std::size_t last_visits_ = 0;
};

// ---------------------------------------------------------------------------
// Kernels. All operands must live on the same tape.

// [m x k] . [k x n] -> [m x n]
Var matmul(const Var& a, const Var& b);
// [B x m x k] . [B x k x n] -> [B x m x n]
Var batched_matmul(const Var& a, const Var& b);
// Swaps the last two axes (rank >= 2).
Var transpose_last(const Var& a);

Var softmax(const Var& x, std::size_t axis);
Var log_softmax(const Var& x, std::size_t axis);

// Elementwise binary ops. One operand may broadcast when its shape, padded
// with leading ones, is all ones followed by the other operand's trailing
// extents (e.g. [C] or [1,C] against [N,C]).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);

Var scale(const Var& x, double c);
Var add_scalar(const Var& x, double c);
Var tanh(const Var& x);
Var log(const Var& x);
Var exp(const Var& x);
Var relu(const Var& x);
Var square(const Var& x);

// Reductions drop the reduced axis.
Var sum(const Var& x, std::size_t axis);
Var mean(const Var& x, std::size_t axis);
Var sum_all(const Var& x);
Var mean_all(const Var& x);

Var concat(const std::vector<Var>& parts, std::size_t axis);
Var concat(const Var& a, const Var& b, std::size_t axis);
Var slice(const Var& x, std::size_t axis, std::size_t start, std::size_t length);
Var reshape(const Var& x, Shape shape);
// Explicit pass-through node.
Var identity(const Var& x);

// Heaviside step on v (spike iff v >= 0). The backward pass substitutes the
// rectangular surrogate 1/(2 width) on |v| < width.
Var spike(const Var& v, double surrogate_width);

struct Conv1dGeometry {
  std::size_t in_channels = 1;
  std::size_t length = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;

  std::size_t out_length() const;
  std::size_t in_features() const { return in_channels * length; }
  std::size_t out_features() const { return out_channels * out_length(); }
};

// Rows of x are channel-major feature vectors [in_channels x length].
// x: [N x in_features], weight: [out_channels x in_channels x kernel],
// bias: [out_channels] -> [N x out_features], zero padding.
Var conv1d(const Var& x, const Var& weight, const Var& bias, const Conv1dGeometry& geom);

// Depthwise convolution along axis 1 with valid padding.
// x: [B x T_in x D], weight: [D x K] -> [B x T_out x D],
// T_out = (T_in - K) / stride + 1.
Var temporal_conv(const Var& x, const Var& weight, std::size_t stride);

}  // namespace taaf
