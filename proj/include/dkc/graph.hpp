#pragma once

// Reverse-mode automatic differentiation over Tensors.
//
// Define-by-run tape: every operation evaluates immediately and records a
// node, so creation order is a valid topological order. backward() walks
// the tape in reverse creation order and accumulates gradients in that
// fixed order, which makes training bit-reproducible for a fixed seed.
// A graph is built per training batch and discarded.

#include <cmath>
#include <string>
#include <vector>

#include "dkc/errors.hpp"
#include "dkc/linalg.hpp"
#include "dkc/tensor.hpp"

namespace dkc {

enum class Op {
  leaf,
  matmul,     // optional transposed right operand
  add,        // same shape, or rank-1 bias broadcast over rows
  mul,
  div,
  tanh,
  relu,
  concat,     // along columns
  slice_cols,
  slice_rows,
  square,
  sum,
  mean,
  scale,
};

class Graph {
 public:
  using NodeId = int;

  // -- construction ----------------------------------------------------

  NodeId leaf(Tensor value) { return push(Op::leaf, -1, -1, std::move(value)); }

  // A leaf registered as a trainable parameter; grads for all params are
  // available after backward() in registration order.
  NodeId param(Tensor value) {
    NodeId id = leaf(std::move(value));
    params_.push_back(id);
    return id;
  }

  NodeId matmul(NodeId a, NodeId b, bool transpose_b = false) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.rank() != 2 || tb.rank() != 2) throw DimError("graph matmul: rank-2 operands required");
    const int inner = transpose_b ? tb.cols() : tb.rows();
    const int out_cols = transpose_b ? tb.rows() : tb.cols();
    if (ta.cols() != inner)
      throw DimError("graph matmul: incompatible shapes " + shape_str(ta) + " vs " + shape_str(tb));
    Tensor out = Tensor::zeros({ta.rows(), out_cols});
    if (transpose_b)
      gemm_acc_nt(ta.data.data(), tb.data.data(), out.data.data(), ta.rows(), ta.cols(), out_cols);
    else
      gemm_acc(ta.data.data(), tb.data.data(), out.data.data(), ta.rows(), ta.cols(), out_cols);
    NodeId id = push(Op::matmul, a, b, std::move(out));
    nodes_[id].flag = transpose_b;
    return id;
  }

  NodeId add(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.same_shape(tb)) {
      Tensor out = ta;
      for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += tb.data[i];
      return push(Op::add, a, b, std::move(out));
    }
    // bias broadcast: [r x c] + [c]
    if (ta.rank() == 2 && tb.rank() == 1 && ta.cols() == tb.cols()) {
      Tensor out = ta;
      for (int i = 0; i < ta.rows(); ++i) {
        double* oi = out.row_ptr(i);
        for (int j = 0; j < ta.cols(); ++j) oi[j] += tb.data[j];
      }
      return push(Op::add, a, b, std::move(out));
    }
    throw DimError("graph add: incompatible shapes " + shape_str(ta) + " vs " + shape_str(tb));
  }

  NodeId sub(NodeId a, NodeId b) { return add(a, scale(b, -1.0)); }

  NodeId mul(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) throw DimError("graph mul: shape mismatch");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= tb.data[i];
    return push(Op::mul, a, b, std::move(out));
  }

  NodeId div(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) throw DimError("graph div: shape mismatch");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] /= tb.data[i];
    return push(Op::div, a, b, std::move(out));
  }

  NodeId tanh(NodeId a) {
    Tensor out = value(a);
    for (double& v : out.data) v = std::tanh(v);
    return push(Op::tanh, a, -1, std::move(out));
  }

  NodeId relu(NodeId a) {
    Tensor out = value(a);
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return push(Op::relu, a, -1, std::move(out));
  }

  NodeId concat(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.rank() != 2 || tb.rank() != 2 || ta.rows() != tb.rows())
      throw DimError("graph concat: row mismatch " + shape_str(ta) + " vs " + shape_str(tb));
    Tensor out = Tensor::zeros({ta.rows(), ta.cols() + tb.cols()});
    for (int i = 0; i < ta.rows(); ++i) {
      double* oi = out.row_ptr(i);
      const double* ai = ta.row_ptr(i);
      const double* bi = tb.row_ptr(i);
      for (int j = 0; j < ta.cols(); ++j) oi[j] = ai[j];
      for (int j = 0; j < tb.cols(); ++j) oi[ta.cols() + j] = bi[j];
    }
    NodeId id = push(Op::concat, a, b, std::move(out));
    nodes_[id].i0 = ta.cols();
    return id;
  }

  NodeId slice_cols(NodeId a, int c0, int c1) {
    const Tensor& ta = value(a);
    if (ta.rank() != 2 || c0 < 0 || c1 > ta.cols() || c0 >= c1)
      throw DimError("graph slice_cols: bad range");
    Tensor out = Tensor::zeros({ta.rows(), c1 - c0});
    for (int i = 0; i < ta.rows(); ++i) {
      const double* ai = ta.row_ptr(i);
      double* oi = out.row_ptr(i);
      for (int j = c0; j < c1; ++j) oi[j - c0] = ai[j];
    }
    NodeId id = push(Op::slice_cols, a, -1, std::move(out));
    nodes_[id].i0 = c0;
    nodes_[id].i1 = c1;
    return id;
  }

  NodeId slice_rows(NodeId a, int r0, int r1) {
    const Tensor& ta = value(a);
    if (ta.rank() != 2 || r0 < 0 || r1 > ta.rows() || r0 >= r1)
      throw DimError("graph slice_rows: bad range");
    Tensor out = Tensor::zeros({r1 - r0, ta.cols()});
    std::copy(ta.row_ptr(r0), ta.row_ptr(r0) + static_cast<std::size_t>(r1 - r0) * ta.cols(),
              out.data.begin());
    NodeId id = push(Op::slice_rows, a, -1, std::move(out));
    nodes_[id].i0 = r0;
    nodes_[id].i1 = r1;
    return id;
  }

  NodeId square(NodeId a) {
    Tensor out = value(a);
    for (double& v : out.data) v = v * v;
    return push(Op::square, a, -1, std::move(out));
  }

  NodeId sum(NodeId a) {
    double s = 0.0;
    for (double v : value(a).data) s += v;
    return push(Op::sum, a, -1, Tensor::scalar(s));
  }

  NodeId mean(NodeId a) {
    const Tensor& ta = value(a);
    if (ta.size() == 0) throw DimError("graph mean: empty tensor");
    double s = 0.0;
    for (double v : ta.data) s += v;
    return push(Op::mean, a, -1, Tensor::scalar(s / static_cast<double>(ta.size())));
  }

  NodeId scale(NodeId a, double s) {
    Tensor out = value(a);
    for (double& v : out.data) v *= s;
    NodeId id = push(Op::scale, a, -1, std::move(out));
    nodes_[id].c = s;
    return id;
  }

  // -- access ------------------------------------------------------------

  const Tensor& value(NodeId id) const { return node(id).val; }

  const Tensor& grad(NodeId id) const {
    if (!ran_backward_) throw StateError("graph: gradients requested before backward()");
    return node(id).grad;
  }

  const std::vector<NodeId>& params() const { return params_; }
  std::size_t node_count() const { return nodes_.size(); }

  // Reverse accumulation from a scalar loss node. Single shot per graph:
  // rebuild the graph to differentiate again.
  void backward(NodeId loss) {
    if (ran_backward_) throw StateError("graph: backward() already ran; rebuild the graph");
    const Tensor& lv = value(loss);
    if (lv.size() != 1) throw DimError("graph backward: loss must be scalar, got " + shape_str(lv));
    for (auto& nd : nodes_) {
      nd.grad = Tensor::zeros(nd.val.shape);
      nd.touched = false;
    }
    nodes_[loss].grad.data[0] = 1.0;
    nodes_[loss].touched = true;
    for (NodeId id = loss; id >= 0; --id) {
      Node& nd = nodes_[id];
      if (!nd.touched) continue;
      accumulate(nd);
    }
    ran_backward_ = true;
  }

 private:
  struct Node {
    Op op;
    NodeId a = -1, b = -1;
    int i0 = 0, i1 = 0;   // slice range / concat split point
    double c = 0.0;       // scale factor
    bool flag = false;    // matmul: right operand transposed
    bool touched = false;
    Tensor val;
    Tensor grad;
  };

  const Node& node(NodeId id) const {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) throw StateError("graph: bad node id");
    return nodes_[static_cast<std::size_t>(id)];
  }

  NodeId push(Op op, NodeId a, NodeId b, Tensor val) {
    Node nd;
    nd.op = op;
    nd.a = a;
    nd.b = b;
    nd.val = std::move(val);
    nodes_.push_back(std::move(nd));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  Tensor& touch(NodeId id) {
    nodes_[id].touched = true;
    return nodes_[id].grad;
  }

  void accumulate(Node& nd) {
    const Tensor& g = nd.grad;
    switch (nd.op) {
      case Op::leaf:
        return;
      case Op::matmul: {
        const Tensor& ta = nodes_[nd.a].val;
        const Tensor& tb = nodes_[nd.b].val;
        Tensor& ga = touch(nd.a);
        Tensor& gb = touch(nd.b);
        if (!nd.flag) {
          // y = a*b: ga += g*b^T, gb += a^T*g
          gemm_acc_nt(g.data.data(), tb.data.data(), ga.data.data(), ta.rows(), tb.cols(), ta.cols());
          gemm_acc_tn(ta.data.data(), g.data.data(), gb.data.data(), ta.cols(), ta.rows(), tb.cols());
        } else {
          // y = a*b^T: ga += g*b, gb += g^T*a
          gemm_acc(g.data.data(), tb.data.data(), ga.data.data(), ta.rows(), tb.rows(), ta.cols());
          gemm_acc_tn(g.data.data(), ta.data.data(), gb.data.data(), tb.rows(), ta.rows(), ta.cols());
        }
        return;
      }
      case Op::add: {
        Tensor& ga = touch(nd.a);
        Tensor& gb = touch(nd.b);
        for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += g.data[i];
        if (gb.same_shape(g)) {
          for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += g.data[i];
        } else {
          // bias broadcast: column sums
          for (int i = 0; i < g.rows(); ++i) {
            const double* gi = g.row_ptr(i);
            for (int j = 0; j < g.cols(); ++j) gb.data[j] += gi[j];
          }
        }
        return;
      }
      case Op::mul: {
        const Tensor& ta = nodes_[nd.a].val;
        const Tensor& tb = nodes_[nd.b].val;
        Tensor& ga = touch(nd.a);
        Tensor& gb = touch(nd.b);
        for (std::size_t i = 0; i < g.data.size(); ++i) {
          ga.data[i] += g.data[i] * tb.data[i];
          gb.data[i] += g.data[i] * ta.data[i];
        }
        return;
      }
      case Op::div: {
        const Tensor& ta = nodes_[nd.a].val;
        const Tensor& tb = nodes_[nd.b].val;
        Tensor& ga = touch(nd.a);
        Tensor& gb = touch(nd.b);
        for (std::size_t i = 0; i < g.data.size(); ++i) {
          const double inv = 1.0 / tb.data[i];
          ga.data[i] += g.data[i] * inv;
          gb.data[i] -= g.data[i] * ta.data[i] * inv * inv;
        }
        return;
      }
      case Op::tanh: {
        Tensor& ga = touch(nd.a);
        for (std::size_t i = 0; i < g.data.size(); ++i) {
          const double y = nd.val.data[i];
          ga.data[i] += g.data[i] * (1.0 - y * y);
        }
        return;
      }
      case Op::relu: {
        const Tensor& ta = nodes_[nd.a].val;
        Tensor& ga = touch(nd.a);
        for (std::size_t i = 0; i < g.data.size(); ++i)
          if (ta.data[i] > 0.0) ga.data[i] += g.data[i];
        return;
      }
      case Op::concat: {
        Tensor& ga = touch(nd.a);
        Tensor& gb = touch(nd.b);
        const int ca = nd.i0;
        const int cb = g.cols() - ca;
        for (int i = 0; i < g.rows(); ++i) {
          const double* gi = g.row_ptr(i);
          double* gai = ga.row_ptr(i);
          double* gbi = gb.row_ptr(i);
          for (int j = 0; j < ca; ++j) gai[j] += gi[j];
          for (int j = 0; j < cb; ++j) gbi[j] += gi[ca + j];
        }
        return;
      }
      case Op::slice_cols: {
        Tensor& ga = touch(nd.a);
        for (int i = 0; i < g.rows(); ++i) {
          const double* gi = g.row_ptr(i);
          double* gai = ga.row_ptr(i);
          for (int j = 0; j < g.cols(); ++j) gai[nd.i0 + j] += gi[j];
        }
        return;
      }
      case Op::slice_rows: {
        Tensor& ga = touch(nd.a);
        const std::size_t count = g.data.size();
        double* dst = ga.row_ptr(nd.i0);
        for (std::size_t i = 0; i < count; ++i) dst[i] += g.data[i];
        return;
      }
      case Op::square: {
        const Tensor& ta = nodes_[nd.a].val;
        Tensor& ga = touch(nd.a);
        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += 2.0 * ta.data[i] * g.data[i];
        return;
      }
      case Op::sum: {
        Tensor& ga = touch(nd.a);
        const double gv = g.data[0];
        for (double& v : ga.data) v += gv;
        return;
      }
      case Op::mean: {
        Tensor& ga = touch(nd.a);
        const double gv = g.data[0] / static_cast<double>(ga.size());
        for (double& v : ga.data) v += gv;
        return;
      }
      case Op::scale: {
        Tensor& ga = touch(nd.a);
        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += nd.c * g.data[i];
        return;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<NodeId> params_;
  bool ran_backward_ = false;
};

}  // namespace dkc
