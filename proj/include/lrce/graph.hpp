#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <string_view>
#include <vector>

#include "lrce/tensor.hpp"

namespace lrce {

struct NodeId {
  std::size_t index = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

enum class OpKind {
  kParameter,
  kConstant,
  kMatMul,
  kAdd,
  kSub,
  kConcatCols,
  kRelu,
  kSigmoid,
  kMeanSqErr,
  kLog,
  kClampedLog,
  kScalarMul,
  kAddScalar,
  kReduceMean,
};

std::string_view op_name(OpKind kind);

/// Gradients keyed by trainable leaf. A missing entry means a zero gradient.
using GradMap = std::map<NodeId, Tensor>;

/// Define-by-run computation graph. Nodes are appended in evaluation order,
/// so every node's inputs have smaller ids and the graph is acyclic by
/// construction. A graph is meant to be built, differentiated and discarded
/// per batch; it must not be shared between threads.
class Graph {
 public:
  NodeId parameter(Tensor value);
  NodeId constant(Tensor value);

  NodeId matmul(NodeId a, NodeId b);
  /// Elementwise sum; `b` may also be a 1 x cols bias row broadcast over rows.
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId concat_cols(NodeId a, NodeId b);
  NodeId relu(NodeId a);
  NodeId sigmoid(NodeId a);
  /// Mean over all elements of (a - b)^2. Returns a 1x1 node.
  NodeId mean_sq_err(NodeId a, NodeId b);
  /// Natural log; throws DomainError on any non-positive input.
  NodeId log(NodeId a);
  /// log(max(a, floor)). Only for loss expressions that need a saturation
  /// guard; the gradient is zero where the floor is active.
  NodeId clamped_log(NodeId a, double floor);
  NodeId scalar_mul(double c, NodeId a);
  NodeId add_scalar(double c, NodeId a);
  NodeId reduce_mean(NodeId a);

  const Tensor& value(NodeId id) const { return nodes_.at(id.index).value; }
  OpKind kind(NodeId id) const { return nodes_.at(id.index).kind; }
  bool is_trainable(NodeId id) const { return nodes_.at(id.index).kind == OpKind::kParameter; }
  std::size_t size() const { return nodes_.size(); }
  std::vector<NodeId> trainable_leaves() const;

  /// Replaces a leaf's value; call replay() afterwards to refresh downstream
  /// nodes. Used by finite-difference checking.
  void set_leaf_value(NodeId id, Tensor value);
  void replay();

  friend GradMap backward(const Graph& graph, NodeId loss);

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    Tensor value;
    double scalar = 0.0;
    bool needs_grad = false;
  };

  NodeId push(OpKind kind, std::vector<NodeId> inputs, double scalar = 0.0);
  Tensor evaluate(const Node& node) const;
  const Node& node(NodeId id) const;

  std::vector<Node> nodes_;
};

/// Reverse-mode pass from a scalar loss node. Every trainable leaf of the
/// graph gets an entry (zeros if it does not influence the loss).
GradMap backward(const Graph& graph, NodeId loss);

struct LeafCheck {
  NodeId leaf;
  double max_rel_error = 0.0;
  bool ok = true;
};

struct GradCheckReport {
  std::vector<LeafCheck> leaves;
  double max_rel_error = 0.0;
  bool passed = true;
};

using BackwardFn = std::function<GradMap(const Graph&, NodeId)>;

/// Compares `backward_fn` against central finite differences on every
/// trainable leaf element. Relative error is |a-b| / (|a| + |b| + 1e-12).
/// The graph's leaf values are restored before returning.
GradCheckReport grad_check(Graph& graph, NodeId loss, double tolerance, double step = 1e-5,
                           const BackwardFn& backward_fn = backward);

}  // namespace lrce
