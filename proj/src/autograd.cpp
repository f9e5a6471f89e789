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

#include "taaf/autograd.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "taaf/error.hpp"

namespace taaf {

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kConstant: return "constant";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kBatchedMatMul: return "batched_matmul";
    case OpKind::kTransposeLast: return "transpose_last";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kTanh: return "tanh";
    case OpKind::kLog: return "log";
    case OpKind::kExp: return "exp";
    case OpKind::kRelu: return "relu";
    case OpKind::kSquare: return "square";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSumAll: return "sum_all";
    case OpKind::kMeanAll: return "mean_all";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kReshape: return "reshape";
    case OpKind::kIdentity: return "identity";
    case OpKind::kSpike: return "spike";
    case OpKind::kConv1d: return "conv1d";
    case OpKind::kTemporalConv: return "temporal_conv";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Var / Tape

const Tensor& Var::value() const { return tape_->value(id_); }
Tensor Var::grad() const { return tape_->grad(id_); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.kind = OpKind::kLeaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.kind = OpKind::kConstant;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::bind(Parameter& param) {
  for (const auto& [p, id] : bound_) {
    if (p == &param) return Var(this, id);
  }
  Var v = leaf(param.value, true);
  bound_.emplace_back(&param, v.id());
  return v;
}

Var Tape::record(OpKind kind, Tensor value, std::vector<std::size_t> parents, BackwardFn fn) {
  Node n;
  n.kind = kind;
  n.value = std::move(value);
  for (std::size_t p : parents) {
    if (p >= nodes_.size()) throw ContractError("parent node recorded after its child");
    n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  }
  n.parents = std::move(parents);
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Tensor Tape::grad(std::size_t id) const {
  const Node& n = nodes_.at(id);
  if (n.grad.size() == n.value.size() && n.grad.shape() == n.value.shape()) return n.grad;
  return Tensor(n.value.shape());
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (g.size() != n.value.size()) {
    throw DimensionError(fmt::format("gradient of size {} for node of shape {}", g.size(),
                                     shape_str(n.value.shape())));
  }
  if (n.grad.shape() != n.value.shape()) {
    n.grad = Tensor(n.value.shape(), g.storage());
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
}

void Tape::accumulate(std::size_t id, std::vector<double>&& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (g.size() != n.value.size()) {
    throw DimensionError(fmt::format("gradient of size {} for node of shape {}", g.size(),
                                     shape_str(n.value.shape())));
  }
  if (n.grad.shape() != n.value.shape()) {
    n.grad = Tensor(n.value.shape(), std::move(g));
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
}

void Tape::backward(const Var& root) {
  if (root.tape_ != this) throw ContractError("backward root belongs to another tape");
  if (nodes_[root.id_].value.size() != 1) {
    throw ContractError(fmt::format("backward needs a scalar root, got shape {}",
                                    shape_str(nodes_[root.id_].value.shape())));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  last_visits_ = 0;
  if (!nodes_[root.id_].requires_grad) return;
  nodes_[root.id_].grad = Tensor(nodes_[root.id_].value.shape(), 1.0);
  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.shape() != n.value.shape()) continue;
    n.backward(*this, i);
    ++last_visits_;
  }
}

void Tape::export_grads() const {
  for (const auto& [param, id] : bound_) {
    const Tensor g = grad(id);
    if (param->grad.shape() != param->value.shape()) param->zero_grad();
    for (std::size_t i = 0; i < g.size(); ++i) param->grad[i] += g[i];
  }
}

// ---------------------------------------------------------------------------
// Helpers

namespace {

Tape& same_tape(const Var& a, const Var& b) {
  if (!a.valid() || !b.valid()) throw ContractError("operation on an unbound Var");
  if (&a.tape() != &b.tape()) throw ContractError("operands live on different tapes");
  return a.tape();
}

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw ContractError("operation on an unbound Var");
  return a.tape();
}

// Splits a shape around `axis` into (outer, extent, inner).
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw DimensionError(fmt::format("{}: axis {} out of range for shape {}", op, axis,
                                     shape_str(shape)));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Shape drop_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (i != axis) out.push_back(shape[i]);
  return out;
}

// Whether `small` broadcasts against `big` under the leading-ones rule.
bool broadcasts_to(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  std::size_t lead = 0;
  while (lead < small.size() && small[lead] == 1) ++lead;
  const std::size_t rest = small.size() - lead;
  for (std::size_t i = 0; i < rest; ++i) {
    if (small[lead + i] != big[big.size() - rest + i]) return false;
  }
  return true;
}

struct BroadcastPlan {
  Shape out;
  std::size_t period_a = 0;  // operand element index = i % period
  std::size_t period_b = 0;
};

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b, const char* op) {
  BroadcastPlan p;
  if (a == b) {
    p.out = a;
  } else if (broadcasts_to(b, a)) {
    p.out = a;
  } else if (broadcasts_to(a, b)) {
    p.out = b;
  } else {
    throw DimensionError(fmt::format("{}: cannot broadcast {} with {}", op, shape_str(a),
                                     shape_str(b)));
  }
  p.period_a = shape_numel(a);
  p.period_b = shape_numel(b);
  return p;
}

// Sums a full-size gradient down to an operand of `period` elements.
std::vector<double> reduce_to_period(const Tensor& g, std::size_t period) {
  if (period == g.size()) return g.storage();
  std::vector<double> out(period, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) out[i % period] += g[i];
  return out;
}

template <typename F, typename DF>
Var unary(const Var& x, OpKind kind, F f, DF df) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return t.record(kind, std::move(out), {x.id()}, [df](Tape& tp, std::size_t self) {
    const auto& n = tp.node(self);
    const Tensor& xin = tp.value(n.parents[0]);
    const Tensor& y = n.value;
    const Tensor& g = tp.out_grad(self);
    std::vector<double> gx(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * df(xin[i], y[i]);
    tp.accumulate(n.parents[0], std::move(gx));
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear algebra

Var matmul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.extent(1) != bv.extent(0)) {
    throw DimensionError(fmt::format("matmul: incompatible shapes {} and {}",
                                     shape_str(av.shape()), shape_str(bv.shape())));
  }
  const std::size_t m = av.extent(0), k = av.extent(1), n = bv.extent(1);
  Tensor out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  return t.record(OpKind::kMatMul, std::move(out), {a.id(), b.id()},
                  [m, k, n](Tape& tp, std::size_t self) {
                    const auto& node = tp.node(self);
                    const std::size_t ia = node.parents[0], ib = node.parents[1];
                    const Tensor& A = tp.value(ia);
                    const Tensor& B = tp.value(ib);
                    const Tensor& g = tp.out_grad(self);
                    if (tp.requires_grad(ia)) {
                      std::vector<double> ga(m * k, 0.0);
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                          double s = 0.0;
                          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * B[p * n + j];
                          ga[i * k + p] = s;
                        }
                      tp.accumulate(ia, std::move(ga));
                    }
                    if (tp.requires_grad(ib)) {
                      std::vector<double> gb(k * n, 0.0);
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                          const double aip = A[i * k + p];
                          if (aip == 0.0) continue;
                          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
                        }
                      tp.accumulate(ib, std::move(gb));
                    }
                  });
}

Var batched_matmul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 3 || bv.rank() != 3 || av.extent(0) != bv.extent(0) ||
      av.extent(2) != bv.extent(1)) {
    throw DimensionError(fmt::format("batched_matmul: incompatible shapes {} and {}",
                                     shape_str(av.shape()), shape_str(bv.shape())));
  }
  const std::size_t nb = av.extent(0), m = av.extent(1), k = av.extent(2), n = bv.extent(2);
  Tensor out(Shape{nb, m, n});
  for (std::size_t q = 0; q < nb; ++q) {
    const double* A = av.data().data() + q * m * k;
    const double* B = bv.data().data() + q * k * n;
    double* C = out.data().data() + q * m * n;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) C[i * n + j] += A[i * k + p] * B[p * n + j];
  }
  return t.record(OpKind::kBatchedMatMul, std::move(out), {a.id(), b.id()},
                  [nb, m, k, n](Tape& tp, std::size_t self) {
                    const auto& node = tp.node(self);
                    const std::size_t ia = node.parents[0], ib = node.parents[1];
                    const Tensor& A = tp.value(ia);
                    const Tensor& B = tp.value(ib);
                    const Tensor& g = tp.out_grad(self);
                    std::vector<double> ga(nb * m * k, 0.0), gb(nb * k * n, 0.0);
                    for (std::size_t q = 0; q < nb; ++q) {
                      const std::size_t oa = q * m * k, ob = q * k * n, og = q * m * n;
                      for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p)
                          for (std::size_t j = 0; j < n; ++j) {
                            ga[oa + i * k + p] += g[og + i * n + j] * B[ob + p * n + j];
                            gb[ob + p * n + j] += A[oa + i * k + p] * g[og + i * n + j];
                          }
                    }
                    tp.accumulate(ia, std::move(ga));
                    tp.accumulate(ib, std::move(gb));
                  });
}

Var transpose_last(const Var& a) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  if (av.rank() < 2) {
    throw DimensionError(fmt::format("transpose_last: rank {} < 2", av.rank()));
  }
  const std::size_t p = av.extent(av.rank() - 2), q = av.extent(av.rank() - 1);
  const std::size_t batches = av.size() / std::max<std::size_t>(1, p * q);
  Shape shape = av.shape();
  std::swap(shape[shape.size() - 2], shape[shape.size() - 1]);
  Tensor out(shape);
  for (std::size_t b = 0; b < batches; ++b)
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < q; ++j) out[b * p * q + j * p + i] = av[b * p * q + i * q + j];
  return t.record(OpKind::kTransposeLast, std::move(out), {a.id()},
                  [p, q, batches](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.out_grad(self);
                    std::vector<double> ga(g.size());
                    for (std::size_t b = 0; b < batches; ++b)
                      for (std::size_t i = 0; i < p; ++i)
                        for (std::size_t j = 0; j < q; ++j)
                          ga[b * p * q + i * q + j] = g[b * p * q + j * p + i];
                    tp.accumulate(tp.node(self).parents[0], std::move(ga));
                  });
}

// ---------------------------------------------------------------------------
// Softmax family

Var softmax(const Var& x, std::size_t axis) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  const AxisSplit s = split_axis(xv.shape(), axis, "softmax");
  if (!xv.all_finite()) throw NumericError("softmax: non-finite input");
  Tensor out(xv.shape());
  std::vector<double> buf(s.n);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double mx = -INFINITY;
      for (std::size_t i = 0; i < s.n; ++i) mx = std::max(mx, xv[base + i * s.inner]);
      for (std::size_t i = 0; i < s.n; ++i) buf[i] = std::exp(xv[base + i * s.inner] - mx);
      const double z = canonical_sum(buf);
      for (std::size_t i = 0; i < s.n; ++i) out[base + i * s.inner] = buf[i] / z;
    }
  return t.record(OpKind::kSoftmax, std::move(out), {x.id()}, [s](Tape& tp, std::size_t self) {
    const auto& node = tp.node(self);
    const Tensor& y = node.value;
    const Tensor& g = tp.out_grad(self);
    std::vector<double> gx(g.size());
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.n * s.inner + in;
        double dot = 0.0;
        for (std::size_t i = 0; i < s.n; ++i) dot += g[base + i * s.inner] * y[base + i * s.inner];
        for (std::size_t i = 0; i < s.n; ++i) {
          const std::size_t at = base + i * s.inner;
          gx[at] = y[at] * (g[at] - dot);
        }
      }
    tp.accumulate(node.parents[0], std::move(gx));
  });
}

Var log_softmax(const Var& x, std::size_t axis) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  const AxisSplit s = split_axis(xv.shape(), axis, "log_softmax");
  if (!xv.all_finite()) throw NumericError("log_softmax: non-finite input");
  Tensor out(xv.shape());
  std::vector<double> buf(s.n);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double mx = -INFINITY;
      for (std::size_t i = 0; i < s.n; ++i) mx = std::max(mx, xv[base + i * s.inner]);
      for (std::size_t i = 0; i < s.n; ++i) buf[i] = std::exp(xv[base + i * s.inner] - mx);
      const double lse = mx + std::log(canonical_sum(buf));
      for (std::size_t i = 0; i < s.n; ++i) out[base + i * s.inner] = xv[base + i * s.inner] - lse;
    }
  return t.record(OpKind::kLogSoftmax, std::move(out), {x.id()},
                  [s](Tape& tp, std::size_t self) {
                    const auto& node = tp.node(self);
                    const Tensor& y = node.value;
                    const Tensor& g = tp.out_grad(self);
                    std::vector<double> gx(g.size());
                    for (std::size_t o = 0; o < s.outer; ++o)
                      for (std::size_t in = 0; in < s.inner; ++in) {
                        const std::size_t base = o * s.n * s.inner + in;
                        double gsum = 0.0;
                        for (std::size_t i = 0; i < s.n; ++i) gsum += g[base + i * s.inner];
                        for (std::size_t i = 0; i < s.n; ++i) {
                          const std::size_t at = base + i * s.inner;
                          gx[at] = g[at] - std::exp(y[at]) * gsum;
                        }
                      }
                    tp.accumulate(node.parents[0], std::move(gx));
                  });
}

// ---------------------------------------------------------------------------
// Elementwise

Var add(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  const BroadcastPlan p = plan_broadcast(a.shape(), b.shape(), "add");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(p.out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i % p.period_a] + bv[i % p.period_b];
  return t.record(OpKind::kAdd, std::move(out), {a.id(), b.id()}, [p](Tape& tp, std::size_t self) {
    const auto& node = tp.node(self);
    const Tensor& g = tp.out_grad(self);
    tp.accumulate(node.parents[0], reduce_to_period(g, p.period_a));
    tp.accumulate(node.parents[1], reduce_to_period(g, p.period_b));
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  const BroadcastPlan p = plan_broadcast(a.shape(), b.shape(), "sub");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(p.out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i % p.period_a] - bv[i % p.period_b];
  return t.record(OpKind::kSub, std::move(out), {a.id(), b.id()}, [p](Tape& tp, std::size_t self) {
    const auto& node = tp.node(self);
    const Tensor& g = tp.out_grad(self);
    tp.accumulate(node.parents[0], reduce_to_period(g, p.period_a));
    std::vector<double> gb = reduce_to_period(g, p.period_b);
    for (double& v : gb) v = -v;
    tp.accumulate(node.parents[1], std::move(gb));
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  const BroadcastPlan p = plan_broadcast(a.shape(), b.shape(), "mul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(p.out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i % p.period_a] * bv[i % p.period_b];
  return t.record(OpKind::kMul, std::move(out), {a.id(), b.id()}, [p](Tape& tp, std::size_t self) {
    const auto& node = tp.node(self);
    const std::size_t ia = node.parents[0], ib = node.parents[1];
    const Tensor& A = tp.value(ia);
    const Tensor& B = tp.value(ib);
    const Tensor& g = tp.out_grad(self);
    if (tp.requires_grad(ia)) {
      std::vector<double> ga(p.period_a, 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i % p.period_a] += g[i] * B[i % p.period_b];
      tp.accumulate(ia, std::move(ga));
    }
    if (tp.requires_grad(ib)) {
      std::vector<double> gb(p.period_b, 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % p.period_b] += g[i] * A[i % p.period_a];
      tp.accumulate(ib, std::move(gb));
    }
  });
}

Var scale(const Var& x, double c) {
  return unary(x, OpKind::kScale, [c](double v) { return c * v; },
               [c](double, double) { return c; });
}

Var add_scalar(const Var& x, double c) {
  return unary(x, OpKind::kAddScalar, [c](double v) { return v + c; },
               [](double, double) { return 1.0; });
}

Var tanh(const Var& x) {
  return unary(x, OpKind::kTanh, [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Var log(const Var& x) {
  return unary(x, OpKind::kLog, [](double v) { return std::log(v); },
               [](double v, double) { return 1.0 / v; });
}

Var exp(const Var& x) {
  return unary(x, OpKind::kExp, [](double v) { return std::exp(v); },
               [](double, double y) { return y; });
}

Var relu(const Var& x) {
  return unary(x, OpKind::kRelu, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var square(const Var& x) {
  return unary(x, OpKind::kSquare, [](double v) { return v * v; },
               [](double v, double) { return 2.0 * v; });
}

// ---------------------------------------------------------------------------
// Reductions

namespace {

Var reduce_axis(const Var& x, std::size_t axis, bool is_mean) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  const char* name = is_mean ? "mean" : "sum";
  const AxisSplit s = split_axis(xv.shape(), axis, name);
  if (s.n == 0) throw DomainError(fmt::format("{}: empty extent on axis {}", name, axis));
  Tensor out(drop_axis(xv.shape(), axis));
  std::vector<double> buf(s.n);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      for (std::size_t i = 0; i < s.n; ++i) buf[i] = xv[base + i * s.inner];
      out[o * s.inner + in] = is_mean ? canonical_mean(buf) : canonical_sum(buf);
    }
  return t.record(is_mean ? OpKind::kMean : OpKind::kSum, std::move(out), {x.id()},
                  [s, is_mean](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.out_grad(self);
                    const double f = is_mean ? 1.0 / static_cast<double>(s.n) : 1.0;
                    std::vector<double> gx(s.outer * s.n * s.inner);
                    for (std::size_t o = 0; o < s.outer; ++o)
                      for (std::size_t i = 0; i < s.n; ++i)
                        for (std::size_t in = 0; in < s.inner; ++in)
                          gx[(o * s.n + i) * s.inner + in] = g[o * s.inner + in] * f;
                    tp.accumulate(tp.node(self).parents[0], std::move(gx));
                  });
}

}  // namespace

Var sum(const Var& x, std::size_t axis) { return reduce_axis(x, axis, false); }
Var mean(const Var& x, std::size_t axis) { return reduce_axis(x, axis, true); }

Var sum_all(const Var& x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  const std::size_t n = xv.size();
  return t.record(OpKind::kSumAll, Tensor::scalar(canonical_sum(xv.data())), {x.id()},
                  [n](Tape& tp, std::size_t self) {
                    const double g = tp.out_grad(self)[0];
                    tp.accumulate(tp.node(self).parents[0], std::vector<double>(n, g));
                  });
}

Var mean_all(const Var& x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  const std::size_t n = xv.size();
  if (n == 0) throw DomainError("mean_all: empty tensor");
  return t.record(OpKind::kMeanAll, Tensor::scalar(canonical_mean(xv.data())), {x.id()},
                  [n](Tape& tp, std::size_t self) {
                    const double g = tp.out_grad(self)[0] / static_cast<double>(n);
                    tp.accumulate(tp.node(self).parents[0], std::vector<double>(n, g));
                  });
}

// ---------------------------------------------------------------------------
// Structural

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  Tape& t = tape_of(parts[0]);
  const Shape& ref = parts[0].shape();
  if (axis >= ref.size()) {
    throw DimensionError(fmt::format("concat: axis {} out of range for {}", axis, shape_str(ref)));
  }
  std::vector<std::size_t> extents;
  std::vector<std::size_t> ids;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (&p.tape() != &t) throw ContractError("concat operands live on different tapes");
    const Shape& sh = p.shape();
    bool ok = sh.size() == ref.size();
    for (std::size_t i = 0; ok && i < sh.size(); ++i)
      if (i != axis && sh[i] != ref[i]) ok = false;
    if (!ok) {
      throw DimensionError(fmt::format("concat: {} does not match {} off axis {}", shape_str(sh),
                                       shape_str(ref), axis));
    }
    extents.push_back(sh[axis]);
    ids.push_back(p.id());
    total += sh[axis];
  }
  Shape out_shape = ref;
  out_shape[axis] = total;
  const AxisSplit s = split_axis(out_shape, axis, "concat");
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    const std::size_t block = extents[k] * s.inner;
    for (std::size_t o = 0; o < s.outer; ++o)
      std::copy_n(pv.data().data() + o * block, block,
                  out.data().data() + o * total * s.inner + offset * s.inner);
    offset += extents[k];
  }
  return t.record(OpKind::kConcat, std::move(out), ids,
                  [s, extents, total](Tape& tp, std::size_t self) {
                    const auto& node = tp.node(self);
                    const Tensor& g = tp.out_grad(self);
                    std::size_t off = 0;
                    for (std::size_t k = 0; k < extents.size(); ++k) {
                      const std::size_t block = extents[k] * s.inner;
                      std::vector<double> gp(s.outer * block);
                      for (std::size_t o = 0; o < s.outer; ++o)
                        std::copy_n(g.data().data() + o * total * s.inner + off * s.inner, block,
                                    gp.data() + o * block);
                      tp.accumulate(node.parents[k], std::move(gp));
                      off += extents[k];
                    }
                  });
}

Var concat(const Var& a, const Var& b, std::size_t axis) { return concat({a, b}, axis); }

Var slice(const Var& x, std::size_t axis, std::size_t start, std::size_t length) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  const AxisSplit s = split_axis(xv.shape(), axis, "slice");
  if (start + length > s.n) {
    throw DimensionError(fmt::format("slice: [{}, {}) exceeds extent {} on axis {}", start,
                                     start + length, s.n, axis));
  }
  Shape out_shape = xv.shape();
  out_shape[axis] = length;
  Tensor out(out_shape);
  const std::size_t block = length * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(xv.data().data() + (o * s.n + start) * s.inner, block,
                out.data().data() + o * block);
  return t.record(OpKind::kSlice, std::move(out), {x.id()},
                  [s, start, length](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.out_grad(self);
                    std::vector<double> gx(s.outer * s.n * s.inner, 0.0);
                    const std::size_t block = length * s.inner;
                    for (std::size_t o = 0; o < s.outer; ++o)
                      std::copy_n(g.data().data() + o * block, block,
                                  gx.data() + (o * s.n + start) * s.inner);
                    tp.accumulate(tp.node(self).parents[0], std::move(gx));
                  });
}

Var reshape(const Var& x, Shape shape) {
  Tape& t = tape_of(x);
  Tensor out = x.value().reshaped(std::move(shape));
  return t.record(OpKind::kReshape, std::move(out), {x.id()}, [](Tape& tp, std::size_t self) {
    tp.accumulate(tp.node(self).parents[0], std::vector<double>(tp.out_grad(self).storage()));
  });
}

Var identity(const Var& x) {
  Tape& t = tape_of(x);
  return t.record(OpKind::kIdentity, x.value(), {x.id()}, [](Tape& tp, std::size_t self) {
    tp.accumulate(tp.node(self).parents[0], tp.out_grad(self));
  });
}

// ---------------------------------------------------------------------------
// Spiking kernels

Var spike(const Var& v, double surrogate_width) {
  if (!(surrogate_width > 0.0)) {
    throw DomainError(fmt::format("spike: surrogate width must be > 0, got {}", surrogate_width));
  }
  Tape& t = tape_of(v);
  const Tensor& vv = v.value();
  Tensor out(vv.shape());
  for (std::size_t i = 0; i < vv.size(); ++i) out[i] = vv[i] >= 0.0 ? 1.0 : 0.0;
  const double height = 1.0 / (2.0 * surrogate_width);
  return t.record(OpKind::kSpike, std::move(out), {v.id()},
                  [surrogate_width, height](Tape& tp, std::size_t self) {
                    const auto& node = tp.node(self);
                    const Tensor& vin = tp.value(node.parents[0]);
                    const Tensor& g = tp.out_grad(self);
                    std::vector<double> gv(g.size());
                    for (std::size_t i = 0; i < g.size(); ++i)
                      gv[i] = std::abs(vin[i]) < surrogate_width ? g[i] * height : 0.0;
                    tp.accumulate(node.parents[0], std::move(gv));
                  });
}

std::size_t Conv1dGeometry::out_length() const {
  const std::size_t padded = length + pad_left + pad_right;
  if (kernel == 0 || stride == 0 || kernel > padded) return 0;
  return (padded - kernel) / stride + 1;
}

Var conv1d(const Var& x, const Var& weight, const Var& bias, const Conv1dGeometry& geom) {
  Tape& t = same_tape(x, weight);
  same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  if (geom.stride == 0) throw DimensionError("conv1d: stride must be >= 1");
  if (geom.kernel == 0 || geom.kernel > geom.length + geom.pad_left + geom.pad_right) {
    throw DimensionError(fmt::format("conv1d: kernel width {} exceeds input length {}",
                                     geom.kernel, geom.length));
  }
  if (xv.rank() != 2 || xv.extent(1) != geom.in_features()) {
    throw DimensionError(fmt::format("conv1d: input {} does not match {} channels x {}",
                                     shape_str(xv.shape()), geom.in_channels, geom.length));
  }
  if (wv.shape() != Shape{geom.out_channels, geom.in_channels, geom.kernel} ||
      bv.shape() != Shape{geom.out_channels}) {
    throw DimensionError(fmt::format("conv1d: weight {} / bias {} do not match geometry",
                                     shape_str(wv.shape()), shape_str(bv.shape())));
  }
  const std::size_t rows = xv.extent(0);
  const std::size_t lout = geom.out_length();
  const std::size_t cin = geom.in_channels, cout = geom.out_channels, len = geom.length;
  const std::size_t k = geom.kernel;
  Tensor out(Shape{rows, cout * lout});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data().data() + r * cin * len;
    double* yr = out.data().data() + r * cout * lout;
    for (std::size_t co = 0; co < cout; ++co)
      for (std::size_t l = 0; l < lout; ++l) {
        double acc = bv[co];
        for (std::size_t ci = 0; ci < cin; ++ci)
          for (std::size_t j = 0; j < k; ++j) {
            const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(l * geom.stride + j) -
                                       static_cast<std::ptrdiff_t>(geom.pad_left);
            if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len)) continue;
            acc += wv[(co * cin + ci) * k + j] * xr[ci * len + static_cast<std::size_t>(pos)];
          }
        yr[co * lout + l] = acc;
      }
  }
  return t.record(
      OpKind::kConv1d, std::move(out), {x.id(), weight.id(), bias.id()},
      [geom, rows, lout](Tape& tp, std::size_t self) {
        const auto& node = tp.node(self);
        const std::size_t ix = node.parents[0], iw = node.parents[1], ib = node.parents[2];
        const Tensor& X = tp.value(ix);
        const Tensor& W = tp.value(iw);
        const Tensor& g = tp.out_grad(self);
        const std::size_t cin = geom.in_channels, cout = geom.out_channels, len = geom.length;
        const std::size_t k = geom.kernel;
        std::vector<double> gx(X.size(), 0.0), gw(W.size(), 0.0), gb(cout, 0.0);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t co = 0; co < cout; ++co)
            for (std::size_t l = 0; l < lout; ++l) {
              const double gy = g[r * cout * lout + co * lout + l];
              if (gy == 0.0) continue;
              gb[co] += gy;
              for (std::size_t ci = 0; ci < cin; ++ci)
                for (std::size_t j = 0; j < k; ++j) {
                  const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(l * geom.stride + j) -
                                             static_cast<std::ptrdiff_t>(geom.pad_left);
                  if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len)) continue;
                  const std::size_t xi = r * cin * len + ci * len + static_cast<std::size_t>(pos);
                  const std::size_t wi = (co * cin + ci) * k + j;
                  gx[xi] += gy * W[wi];
                  gw[wi] += gy * X[xi];
                }
            }
        tp.accumulate(ix, std::move(gx));
        tp.accumulate(iw, std::move(gw));
        tp.accumulate(ib, std::move(gb));
      });
}

Var temporal_conv(const Var& x, const Var& weight, std::size_t stride) {
  Tape& t = same_tape(x, weight);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  if (xv.rank() != 3 || wv.rank() != 2 || wv.extent(0) != xv.extent(2)) {
    throw DimensionError(fmt::format("temporal_conv: input {} and kernel {} are incompatible",
                                     shape_str(xv.shape()), shape_str(wv.shape())));
  }
  const std::size_t nb = xv.extent(0), tin = xv.extent(1), d = xv.extent(2), k = wv.extent(1);
  if (stride == 0 || k == 0 || k > tin) {
    throw DimensionError(fmt::format("temporal_conv: kernel length {} / stride {} invalid for {} steps",
                                     k, stride, tin));
  }
  const std::size_t tout = (tin - k) / stride + 1;
  Tensor out(Shape{nb, tout, d});
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t to = 0; to < tout; ++to)
      for (std::size_t c = 0; c < d; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j)
          acc += wv[c * k + j] * xv[(b * tin + to * stride + j) * d + c];
        out[(b * tout + to) * d + c] = acc;
      }
  return t.record(OpKind::kTemporalConv, std::move(out), {x.id(), weight.id()},
                  [nb, tin, d, k, tout, stride](Tape& tp, std::size_t self) {
                    const auto& node = tp.node(self);
                    const std::size_t ix = node.parents[0], iw = node.parents[1];
                    const Tensor& X = tp.value(ix);
                    const Tensor& W = tp.value(iw);
                    const Tensor& g = tp.out_grad(self);
                    std::vector<double> gx(X.size(), 0.0), gw(W.size(), 0.0);
                    for (std::size_t b = 0; b < nb; ++b)
                      for (std::size_t to = 0; to < tout; ++to)
                        for (std::size_t c = 0; c < d; ++c) {
                          const double gy = g[(b * tout + to) * d + c];
                          for (std::size_t j = 0; j < k; ++j) {
                            const std::size_t xi = (b * tin + to * stride + j) * d + c;
                            gx[xi] += gy * W[c * k + j];
                            gw[c * k + j] += gy * X[xi];
                          }
                        }
                    tp.accumulate(ix, std::move(gx));
                    tp.accumulate(iw, std::move(gw));
                  });
}

}  // namespace taaf
