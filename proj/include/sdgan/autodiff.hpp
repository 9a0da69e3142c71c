#pragma once
// Reverse-mode automatic differentiation over Tensor.
//
// The graph is built eagerly: every operation allocates a Node holding its
// value, a zero-initialised gradient buffer, links to its parents, and a
// closure implementing its local chain rule. backward() runs a single
// iterative topological pass from a scalar root and accumulates dL/dx into
// every reachable node with requires_grad set. Nodes whose parents all have
// requires_grad=false are created as constants (no parents, no closure), so
// untracked subgraphs cost nothing at backward time and can never receive
// gradient.

#include <algorithm>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "sdgan/tensor.hpp"

namespace sdgan {

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // same shape as value, starts all-zero
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;  // scatters this->grad into parents
  const char* op = "leaf";
};

/// Value-semantics handle to a graph node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr n) : node_(std::move(n)) {}

  /// A leaf with its own storage; requires_grad marks it trainable.
  static Var leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->grad = Tensor::zeros(value.shape());
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
  }

  /// A non-trainable leaf (inputs, stopped gradients).
  static Var constant(Tensor value) { return leaf(std::move(value), false); }

  bool defined() const { return node_ != nullptr; }
  const NodePtr& node() const { return node_; }
  const Tensor& value() const { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  // Handles share the node, so mutation through a const handle is allowed
  // (same object identity either way).
  Tensor& mutable_value() const { return node_->value; }
  Tensor& mutable_grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t numel() const { return node_->value.numel(); }

  /// Scalar payload of a shape-{1} tensor.
  double item() const {
    if (numel() != 1) {
      throw std::logic_error("Var::item: tensor has " + std::to_string(numel()) +
                             " elements, expected 1");
    }
    return value()[0];
  }

  void zero_grad() const { node_->grad = Tensor::zeros(node_->value.shape()); }

 private:
  NodePtr node_;
};

namespace detail {

inline void check_defined(const Var& v, const char* op) {
  if (!v.defined()) throw std::logic_error(std::string(op) + ": undefined Var");
}

inline void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()));
  }
}

/// Builds the result node for an op. When no parent is tracked the result is
/// a constant and the parents/closure are dropped (graph pruning).
inline Var make_op(const char* op, Tensor value, std::vector<NodePtr> parents,
                   std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->grad = Tensor::zeros(value.shape());
  n->value = std::move(value);
  n->op = op;
  bool tracked = false;
  for (const auto& p : parents) tracked = tracked || p->requires_grad;
  n->requires_grad = tracked;
  if (tracked) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  return Var(std::move(n));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise ops
// ---------------------------------------------------------------------------

inline Var add(const Var& a, const Var& b) {
  detail::check_defined(a, "add");
  detail::check_defined(b, "add");
  detail::check_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  return detail::make_op("add", std::move(out), {a.node(), b.node()}, [](Node& self) {
    for (int side = 0; side < 2; ++side) {
      Node& p = *self.parents[side];
      if (!p.requires_grad) continue;
      for (std::size_t i = 0; i < self.grad.numel(); ++i) p.grad[i] += self.grad[i];
    }
  });
}

inline Var sub(const Var& a, const Var& b) {
  detail::check_defined(a, "sub");
  detail::check_defined(b, "sub");
  detail::check_same_shape(a, b, "sub");
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] - b.value()[i];
  return detail::make_op("sub", std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad)
      for (std::size_t i = 0; i < self.grad.numel(); ++i) pa.grad[i] += self.grad[i];
    if (pb.requires_grad)
      for (std::size_t i = 0; i < self.grad.numel(); ++i) pb.grad[i] -= self.grad[i];
  });
}

/// Elementwise (Hadamard) product; shapes must match exactly.
inline Var mul(const Var& a, const Var& b) {
  detail::check_defined(a, "mul");
  detail::check_defined(b, "mul");
  detail::check_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * b.value()[i];
  return detail::make_op("mul", std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad)
      for (std::size_t i = 0; i < self.grad.numel(); ++i)
        pa.grad[i] += self.grad[i] * pb.value[i];
    if (pb.requires_grad)
      for (std::size_t i = 0; i < self.grad.numel(); ++i)
        pb.grad[i] += self.grad[i] * pa.value[i];
  });
}

inline Var add_scalar(const Var& a, double s) {
  detail::check_defined(a, "add_scalar");
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + s;
  return detail::make_op("add_scalar", std::move(out), {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    for (std::size_t i = 0; i < self.grad.numel(); ++i) p.grad[i] += self.grad[i];
  });
}

inline Var scale(const Var& a, double s) {
  detail::check_defined(a, "scale");
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * s;
  return detail::make_op("scale", std::move(out), {a.node()}, [s](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    for (std::size_t i = 0; i < self.grad.numel(); ++i) p.grad[i] += self.grad[i] * s;
  });
}

inline Var neg(const Var& a) { return scale(a, -1.0); }

// ---------------------------------------------------------------------------
// unary nonlinearities
// ---------------------------------------------------------------------------

inline Var tanh_op(const Var& a) {
  detail::check_defined(a, "tanh");
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(a.value()[i]);
  return detail::make_op("tanh", std::move(out), {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    for (std::size_t i = 0; i < self.grad.numel(); ++i) {
      const double t = self.value[i];
      p.grad[i] += self.grad[i] * (1.0 - t * t);
    }
  });
}

inline Var relu(const Var& a) {
  detail::check_defined(a, "relu");
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] > 0.0 ? a.value()[i] : 0.0;
  return detail::make_op("relu", std::move(out), {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    for (std::size_t i = 0; i < self.grad.numel(); ++i)
      if (p.value[i] > 0.0) p.grad[i] += self.grad[i];
  });
}

inline Var square(const Var& a) {
  detail::check_defined(a, "square");
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * a.value()[i];
  return detail::make_op("square", std::move(out), {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    for (std::size_t i = 0; i < self.grad.numel(); ++i)
      p.grad[i] += self.grad[i] * 2.0 * p.value[i];
  });
}

/// |x| with subgradient 0 at x == 0.
inline Var abs_op(const Var& a) {
  detail::check_defined(a, "abs");
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::abs(a.value()[i]);
  return detail::make_op("abs", std::move(out), {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    for (std::size_t i = 0; i < self.grad.numel(); ++i) {
      const double x = p.value[i];
      const double sign = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
      p.grad[i] += self.grad[i] * sign;
    }
  });
}

namespace detail {

/// Numerically stable softplus: max(x,0) + log1p(exp(-|x|)).
inline double softplus_value(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

/// Logistic sigmoid without overflow on either tail.
inline double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

/// log(1 + exp(x)), evaluated stably; derivative is sigmoid(x).
inline Var softplus(const Var& a) {
  detail::check_defined(a, "softplus");
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i)
    out[i] = detail::softplus_value(a.value()[i]);
  return detail::make_op("softplus", std::move(out), {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    for (std::size_t i = 0; i < self.grad.numel(); ++i)
      p.grad[i] += self.grad[i] * detail::sigmoid_value(p.value[i]);
  });
}

// ---------------------------------------------------------------------------
// matrix / structural ops
// ---------------------------------------------------------------------------

/// [m x k] @ [k x n] -> [m x n].
inline Var matmul(const Var& a, const Var& b) {
  detail::check_defined(a, "matmul");
  detail::check_defined(b, "matmul");
  if (a.value().rank() != 2 || b.value().rank() != 2 ||
      a.value().cols() != b.value().rows()) {
    throw std::invalid_argument("matmul: incompatible shapes " +
                                shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()));
  }
  const std::size_t m = a.value().rows(), k = a.value().cols(), n = b.value().cols();
  Tensor out = Tensor::zeros({m, n});
  {
    const double* pa = a.value().data();
    const double* pb = b.value().data();
    double* po = out.data();
    // i-k-j loop order keeps the inner loop contiguous in both b and out.
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double aik = pa[i * k + kk];
        for (std::size_t j = 0; j < n; ++j) po[i * n + j] += aik * pb[kk * n + j];
      }
  }
  return detail::make_op(
      "matmul", std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const double* g = self.grad.data();
        if (pa.requires_grad) {
          // dA = G @ B^T
          const double* bv = pb.value.data();
          double* ga = pa.grad.data();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
              const double gij = g[i * n + j];
              for (std::size_t kk = 0; kk < k; ++kk)
                ga[i * k + kk] += gij * bv[kk * n + j];
            }
        }
        if (pb.requires_grad) {
          // dB = A^T @ G
          const double* av = pa.value.data();
          double* gb = pb.grad.data();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t kk = 0; kk < k; ++kk) {
              const double aik = av[i * k + kk];
              for (std::size_t j = 0; j < n; ++j)
                gb[kk * n + j] += aik * g[i * n + j];
            }
        }
      });
}

/// Adds a length-n bias vector to every row of an [m x n] matrix. This is the
/// one place rows and a vector combine; there is no general broadcasting.
inline Var add_bias(const Var& x, const Var& b) {
  detail::check_defined(x, "add_bias");
  detail::check_defined(b, "add_bias");
  if (x.value().rank() != 2 || b.value().rank() != 1 ||
      x.value().cols() != b.shape()[0]) {
    throw std::invalid_argument("add_bias: incompatible shapes " +
                                shape_to_string(x.shape()) + " vs " +
                                shape_to_string(b.shape()));
  }
  const std::size_t m = x.value().rows(), n = x.value().cols();
  Tensor out = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.value()[i * n + j] + b.value()[j];
  return detail::make_op(
      "add_bias", std::move(out), {x.node(), b.node()}, [m, n](Node& self) {
        Node& px = *self.parents[0];
        Node& pb = *self.parents[1];
        if (px.requires_grad)
          for (std::size_t i = 0; i < m * n; ++i) px.grad[i] += self.grad[i];
        if (pb.requires_grad)
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) pb.grad[j] += self.grad[i * n + j];
      });
}

/// Concatenates two tensors of equal rank along `axis` (rank-1: axis 0;
/// rank-2: axis 0 or 1). All other dimensions must match.
inline Var concat(const Var& a, const Var& b, std::size_t axis) {
  detail::check_defined(a, "concat");
  detail::check_defined(b, "concat");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != sb.size() || axis >= sa.size()) {
    throw std::invalid_argument("concat: incompatible shapes " + shape_to_string(sa) +
                                " vs " + shape_to_string(sb) + " along axis " +
                                std::to_string(axis));
  }
  for (std::size_t d = 0; d < sa.size(); ++d) {
    if (d != axis && sa[d] != sb[d]) {
      throw std::invalid_argument("concat: non-concat dimensions differ, " +
                                  shape_to_string(sa) + " vs " + shape_to_string(sb));
    }
  }
  Shape so = sa;
  so[axis] += sb[axis];
  Tensor out = Tensor::zeros(so);
  // Treat the tensor as [outer, axis_len, inner] and copy blockwise.
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= sa[d];
  for (std::size_t d = axis + 1; d < sa.size(); ++d) inner *= sa[d];
  const std::size_t la = sa[axis], lb = sb[axis];
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < la * inner; ++i)
      out[o * (la + lb) * inner + i] = a.value()[o * la * inner + i];
    for (std::size_t i = 0; i < lb * inner; ++i)
      out[(o * (la + lb) + la) * inner + i] = b.value()[o * lb * inner + i];
  }
  return detail::make_op(
      "concat", std::move(out), {a.node(), b.node()},
      [outer, inner, la, lb](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        for (std::size_t o = 0; o < outer; ++o) {
          if (pa.requires_grad)
            for (std::size_t i = 0; i < la * inner; ++i)
              pa.grad[o * la * inner + i] += self.grad[o * (la + lb) * inner + i];
          if (pb.requires_grad)
            for (std::size_t i = 0; i < lb * inner; ++i)
              pb.grad[o * lb * inner + i] += self.grad[(o * (la + lb) + la) * inner + i];
        }
      });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

namespace detail {

/// Shape-{1} tensor around a value this library computed itself. Unlike
/// Tensor::scalar it does not reject non-finite values: a diverged loss must
/// surface as a value the training loop can inspect, not as a constructor
/// error deep inside the graph.
inline Tensor computed_scalar(double v) {
  Tensor t = Tensor::zeros({1});
  t[0] = v;
  return t;
}

}  // namespace detail

inline Var sum(const Var& a) {
  detail::check_defined(a, "sum");
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a.value()[i];
  return detail::make_op("sum", detail::computed_scalar(s), {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    for (std::size_t i = 0; i < p.grad.numel(); ++i) p.grad[i] += self.grad[0];
  });
}

inline Var mean(const Var& a) {
  detail::check_defined(a, "mean");
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a.value()[i];
  const double inv_n = 1.0 / static_cast<double>(a.numel());
  return detail::make_op("mean", detail::computed_scalar(s * inv_n), {a.node()},
                         [inv_n](Node& self) {
                           Node& p = *self.parents[0];
                           if (!p.requires_grad) return;
                           for (std::size_t i = 0; i < p.grad.numel(); ++i)
                             p.grad[i] += self.grad[0] * inv_n;
                         });
}

// ---------------------------------------------------------------------------
// gradient stop
// ---------------------------------------------------------------------------

/// Returns a constant leaf holding a copy of a's value. Gradient never flows
/// through; detach(detach(x)) behaves identically to detach(x).
inline Var detach(const Var& a) {
  detail::check_defined(a, "detach");
  return Var::constant(a.value());
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

/// Reverse accumulation from a scalar root. Seeds d(root)/d(root) = 1, then
/// applies each node's chain rule exactly once in reverse topological order.
/// Leaf gradients accumulate (+=) across calls and are reset with
/// zero_grad(); interior op-node gradients are per-call scratch and are
/// cleared here before each pass.
inline void backward(const Var& root) {
  detail::check_defined(root, "backward");
  if (root.numel() != 1) {
    throw std::invalid_argument("backward: root must be scalar, got shape " +
                                shape_to_string(root.shape()));
  }
  if (!root.requires_grad()) {  // no tracked leaves anywhere below
    root.mutable_grad()[0] += 1.0;
    return;
  }

  // Iterative post-order DFS (explicit stack) to get a topological order;
  // graphs can be thousands of nodes deep, so no recursion.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [n, next_child] = stack.back();
    if (next_child < n->parents.size()) {
      Node* p = n->parents[next_child++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  // Interior buffers may hold values from a previous pass over this graph;
  // only leaves carry gradient across calls.
  for (Node* n : order) {
    if (n->backward_fn) {
      Tensor& g = n->grad;
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] = 0.0;
    }
  }
  root.mutable_grad()[0] += 1.0;
  // order is children-before-parents reversed; walk it from the end (root)
  // towards the leaves.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

// ---------------------------------------------------------------------------
// operator sugar
// ---------------------------------------------------------------------------

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator+(const Var& a, double s) { return add_scalar(a, s); }
inline Var operator+(double s, const Var& a) { return add_scalar(a, s); }
inline Var operator-(const Var& a, double s) { return add_scalar(a, -s); }
inline Var operator*(const Var& a, double s) { return scale(a, s); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }
inline Var operator-(const Var& a) { return neg(a); }

}  // namespace sdgan
