#pragma once

// Multilayer perceptron over Tensors. Two evaluation routes: a plain
// inference path and a graph-building path for training. Both go through
// the same gemm kernels in the same order, so their outputs agree bitwise.

#include <string>
#include <vector>

#include "dkc/graph.hpp"
#include "dkc/rng.hpp"
#include "dkc/tensor.hpp"

namespace dkc {

enum class Activation { tanh, relu };

struct Mlp {
  std::vector<int> widths;       // input, hidden..., output
  std::vector<Tensor> weights;   // per layer, [in x out]
  std::vector<Tensor> biases;    // per layer, [out]
  Activation activation = Activation::tanh;

  int layer_count() const { return static_cast<int>(weights.size()); }
  int input_width() const { return widths.front(); }
  int output_width() const { return widths.back(); }

  std::int64_t parameter_count() const {
    std::int64_t n = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
      n += static_cast<std::int64_t>(widths[l] + 1) * widths[l + 1];
    return n;
  }

  void fill(double v) {
    for (auto& w : weights) w.fill(v);
    for (auto& b : biases) b.fill(v);
  }
};

// Weights and biases uniform in [-sqrt(1/fan_in), +sqrt(1/fan_in)].
inline Mlp mlp_init(std::vector<int> widths, Rng& rng, Activation act = Activation::tanh) {
  if (widths.size() < 2) throw DimError("mlp_init: need at least input and output widths");
  for (int w : widths)
    if (w <= 0) throw DimError("mlp_init: widths must be positive");
  Mlp net;
  net.widths = std::move(widths);
  net.activation = act;
  for (std::size_t l = 0; l + 1 < net.widths.size(); ++l) {
    const int in = net.widths[l];
    const int out = net.widths[l + 1];
    const double bound = std::sqrt(1.0 / in);
    Tensor w = Tensor::zeros({in, out});
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    Tensor b = Tensor::zeros({out});
    for (double& v : b.data) v = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

// input [batch x in] -> [batch x out]; hidden layers activated, output
// layer affine.
inline Tensor mlp_forward(const Mlp& net, const Tensor& input) {
  if (input.rank() != 2 || input.cols() != net.input_width())
    throw DimError("mlp_forward: input width " + std::to_string(input.cols()) +
                   " does not match layer 0 input width " + std::to_string(net.input_width()));
  Tensor x = input;
  for (int l = 0; l < net.layer_count(); ++l) {
    const Tensor& w = net.weights[static_cast<std::size_t>(l)];
    const Tensor& b = net.biases[static_cast<std::size_t>(l)];
    if (x.cols() != w.rows())
      throw DimError("mlp_forward: width mismatch at layer " + std::to_string(l));
    Tensor y = Tensor::zeros({x.rows(), w.cols()});
    gemm_acc(x.data.data(), w.data.data(), y.data.data(), x.rows(), x.cols(), w.cols());
    for (int i = 0; i < y.rows(); ++i) {
      double* yi = y.row_ptr(i);
      for (int j = 0; j < y.cols(); ++j) yi[j] += b.data[j];
    }
    if (l + 1 < net.layer_count()) {
      if (net.activation == Activation::tanh)
        for (double& v : y.data) v = std::tanh(v);
      else
        for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    }
    x = std::move(y);
  }
  return x;
}

// Graph route. Parameter nodes are placed once per graph (weights and
// biases in layer order) and reused across forward calls.
struct MlpNodes {
  std::vector<Graph::NodeId> weights, biases;
};

inline MlpNodes mlp_place_params(Graph& g, const Mlp& net) {
  MlpNodes nodes;
  for (int l = 0; l < net.layer_count(); ++l) {
    nodes.weights.push_back(g.param(net.weights[static_cast<std::size_t>(l)]));
    nodes.biases.push_back(g.param(net.biases[static_cast<std::size_t>(l)]));
  }
  return nodes;
}

inline Graph::NodeId mlp_forward(Graph& g, const Mlp& net, const MlpNodes& nodes,
                                 Graph::NodeId input) {
  Graph::NodeId x = input;
  for (int l = 0; l < net.layer_count(); ++l) {
    x = g.add(g.matmul(x, nodes.weights[static_cast<std::size_t>(l)]),
              nodes.biases[static_cast<std::size_t>(l)]);
    if (l + 1 < net.layer_count())
      x = net.activation == Activation::tanh ? g.tanh(x) : g.relu(x);
  }
  return x;
}

}  // namespace dkc
