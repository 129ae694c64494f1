#include "lrce/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace lrce {

std::string to_string(Activation a) {
  return a == Activation::kSigmoid ? "sigmoid" : "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "sigmoid") return Activation::kSigmoid;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

void MlpSpec::validate() const {
  if (widths.size() < 3) {
    throw std::invalid_argument("MlpSpec needs at least one hidden layer (>= 3 widths)");
  }
  for (auto w : widths) {
    if (w == 0) throw std::invalid_argument("MlpSpec widths must be >= 1");
  }
}

MlpSpec make_spec(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                  Activation output) {
  MlpSpec spec;
  spec.widths.push_back(in);
  spec.widths.insert(spec.widths.end(), hidden.begin(), hidden.end());
  spec.widths.push_back(out);
  spec.output = output;
  spec.validate();
  return spec;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

Mlp init_mlp(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Mlp net;
  net.spec = spec;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const std::size_t fan_in = spec.widths[l];
    const std::size_t fan_out = spec.widths[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor w(fan_in, fan_out);
    for (double& v : w.data()) v = dist(rng);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(1, fan_out, 0.0);
  }
  return net;
}

Tensor Mlp::apply(const Tensor& input) const {
  if (input.rank() != 2 || input.cols() != spec.input_width()) {
    throw ShapeError("mlp: input shape " + shape_str(input.shape()) + " does not match input width " +
                     std::to_string(spec.input_width()));
  }
  Tensor h = input;
  Tensor next;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    kernels::matmul(h, weights[l], next);
    kernels::add_bias_row(next, biases[l]);
    if (l + 1 < weights.size()) {
      kernels::relu_inplace(next);
    } else if (spec.output == Activation::kSigmoid) {
      kernels::sigmoid_inplace(next);
    }
    std::swap(h, next);
  }
  return h;
}

BoundMlp bind_mlp(const Mlp& net, Graph& graph, bool trainable) {
  BoundMlp bound;
  bound.params.reserve(net.weights.size() * 2);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    bound.params.push_back(trainable ? graph.parameter(net.weights[l]) : graph.constant(net.weights[l]));
    bound.params.push_back(trainable ? graph.parameter(net.biases[l]) : graph.constant(net.biases[l]));
  }
  return bound;
}

NodeId mlp_forward(const Mlp& net, const BoundMlp& bound, NodeId input, Graph& graph) {
  if (graph.value(input).rank() != 2 || graph.value(input).cols() != net.spec.input_width()) {
    throw ShapeError("mlp: input shape " + shape_str(graph.value(input).shape()) +
                     " does not match input width " + std::to_string(net.spec.input_width()));
  }
  NodeId h = input;
  const std::size_t layers = net.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    h = graph.add(graph.matmul(h, bound.params[2 * l]), bound.params[2 * l + 1]);
    if (l + 1 < layers) {
      h = graph.relu(h);
    } else if (net.spec.output == Activation::kSigmoid) {
      h = graph.sigmoid(h);
    }
  }
  return h;
}

}  // namespace lrce
