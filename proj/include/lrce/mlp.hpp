#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrce/graph.hpp"
#include "lrce/tensor.hpp"

namespace lrce {

enum class Activation { kIdentity, kSigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Layer widths from input to output; hidden layers use ReLU.
struct MlpSpec {
  std::vector<std::size_t> widths;
  Activation output = Activation::kIdentity;

  void validate() const;
  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }
  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

MlpSpec make_spec(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                  Activation output = Activation::kIdentity);

struct Mlp {
  MlpSpec spec;
  std::vector<Tensor> weights;  // fan_in x fan_out
  std::vector<Tensor> biases;   // 1 x fan_out

  std::size_t layer_count() const { return weights.size(); }
  std::size_t parameter_count() const;

  /// Graph-free forward pass. Uses the same kernels as the graph ops, so the
  /// result is bit-identical to mlp_forward on the same input.
  Tensor apply(const Tensor& input) const;

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// Glorot-uniform weights, zero biases; reproducible per seed.
Mlp init_mlp(const MlpSpec& spec, std::uint64_t seed);

/// Leaf ids of a network's parameters inside one graph, ordered
/// w0, b0, w1, b1, ...
struct BoundMlp {
  std::vector<NodeId> params;
};

/// Registers the network's parameters as graph leaves. Non-trainable
/// bindings become constants, so gradients flow through them but are never
/// reported for them.
BoundMlp bind_mlp(const Mlp& net, Graph& graph, bool trainable);

NodeId mlp_forward(const Mlp& net, const BoundMlp& bound, NodeId input, Graph& graph);

}  // namespace lrce
