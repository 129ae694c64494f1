#include "lrce/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lrce {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kParameter: return "parameter";
    case OpKind::kConstant: return "constant";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kRelu: return "relu";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kMeanSqErr: return "mean_sq_err";
    case OpKind::kLog: return "log";
    case OpKind::kClampedLog: return "clamped_log";
    case OpKind::kScalarMul: return "scalar_mul";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kReduceMean: return "reduce_mean";
  }
  return "unknown";
}

namespace {

[[noreturn]] void shape_mismatch(OpKind kind, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op_name(kind)) + ": incompatible shapes " + shape_str(a.shape()) +
                   " and " + shape_str(b.shape()));
}

void require_rank2(OpKind kind, const Tensor& t) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op_name(kind)) + ": expected rank-2 input, got " +
                     shape_str(t.shape()));
  }
}

bool is_bias_row(const Tensor& a, const Tensor& b) {
  return b.rank() == 2 && a.rank() == 2 && b.rows() == 1 && b.cols() == a.cols() && a.rows() != 1;
}

}  // namespace

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size()) throw std::out_of_range("graph node id out of range");
  return nodes_[id.index];
}

NodeId Graph::parameter(Tensor value) {
  nodes_.push_back(Node{OpKind::kParameter, {}, std::move(value), 0.0, true});
  return NodeId{nodes_.size() - 1};
}

NodeId Graph::constant(Tensor value) {
  nodes_.push_back(Node{OpKind::kConstant, {}, std::move(value), 0.0, false});
  return NodeId{nodes_.size() - 1};
}

NodeId Graph::push(OpKind kind, std::vector<NodeId> inputs, double scalar) {
  Node n{kind, std::move(inputs), Tensor{}, scalar, false};
  for (auto in : n.inputs) n.needs_grad = n.needs_grad || node(in).needs_grad;
  n.value = evaluate(n);
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

Tensor Graph::evaluate(const Node& n) const {
  auto in = [&](std::size_t i) -> const Tensor& { return nodes_[n.inputs[i].index].value; };
  Tensor out;
  switch (n.kind) {
    case OpKind::kParameter:
    case OpKind::kConstant:
      return n.value;
    case OpKind::kMatMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      require_rank2(n.kind, a);
      require_rank2(n.kind, b);
      if (a.cols() != b.rows()) shape_mismatch(n.kind, a, b);
      kernels::matmul(a, b, out);
      return out;
    }
    case OpKind::kAdd:
    case OpKind::kSub: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const double sign = n.kind == OpKind::kAdd ? 1.0 : -1.0;
      out = a;
      if (a.shape() == b.shape()) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += sign * b[i];
      } else if (is_bias_row(a, b)) {
        if (sign > 0) {
          kernels::add_bias_row(out, b);
        } else {
          for (std::size_t r = 0; r < a.rows(); ++r)
            for (std::size_t c = 0; c < a.cols(); ++c) out.at(r, c) -= b[c];
        }
      } else {
        shape_mismatch(n.kind, a, b);
      }
      return out;
    }
    case OpKind::kConcatCols: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      require_rank2(n.kind, a);
      require_rank2(n.kind, b);
      if (a.rows() != b.rows()) shape_mismatch(n.kind, a, b);
      out = Tensor(a.rows(), a.cols() + b.cols());
      for (std::size_t r = 0; r < a.rows(); ++r) {
        std::copy(a.row(r).begin(), a.row(r).end(), out.row(r).begin());
        std::copy(b.row(r).begin(), b.row(r).end(), out.row(r).begin() + a.cols());
      }
      return out;
    }
    case OpKind::kRelu:
      out = in(0);
      kernels::relu_inplace(out);
      return out;
    case OpKind::kSigmoid:
      out = in(0);
      kernels::sigmoid_inplace(out);
      return out;
    case OpKind::kMeanSqErr: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (a.shape() != b.shape()) shape_mismatch(n.kind, a, b);
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
      }
      return Tensor::scalar(s / static_cast<double>(a.size()));
    }
    case OpKind::kLog:
      out = in(0);
      for (double& v : out.data()) {
        if (!(v > 0.0)) throw DomainError("log: non-positive input " + std::to_string(v));
        v = std::log(v);
      }
      return out;
    case OpKind::kClampedLog:
      out = in(0);
      for (double& v : out.data()) v = std::log(std::max(v, n.scalar));
      return out;
    case OpKind::kScalarMul:
      out = in(0);
      for (double& v : out.data()) v *= n.scalar;
      return out;
    case OpKind::kAddScalar:
      out = in(0);
      for (double& v : out.data()) v += n.scalar;
      return out;
    case OpKind::kReduceMean: {
      const Tensor& a = in(0);
      double s = 0.0;
      for (double v : a.data()) s += v;
      return Tensor::scalar(s / static_cast<double>(a.size()));
    }
  }
  throw std::logic_error("unhandled op kind");
}

NodeId Graph::matmul(NodeId a, NodeId b) { return push(OpKind::kMatMul, {a, b}); }
NodeId Graph::add(NodeId a, NodeId b) { return push(OpKind::kAdd, {a, b}); }
NodeId Graph::sub(NodeId a, NodeId b) { return push(OpKind::kSub, {a, b}); }
NodeId Graph::concat_cols(NodeId a, NodeId b) { return push(OpKind::kConcatCols, {a, b}); }
NodeId Graph::relu(NodeId a) { return push(OpKind::kRelu, {a}); }
NodeId Graph::sigmoid(NodeId a) { return push(OpKind::kSigmoid, {a}); }
NodeId Graph::mean_sq_err(NodeId a, NodeId b) { return push(OpKind::kMeanSqErr, {a, b}); }
NodeId Graph::log(NodeId a) { return push(OpKind::kLog, {a}); }
NodeId Graph::clamped_log(NodeId a, double floor) {
  if (!(floor > 0.0)) throw DomainError("clamped_log: floor must be positive");
  return push(OpKind::kClampedLog, {a}, floor);
}
NodeId Graph::scalar_mul(double c, NodeId a) { return push(OpKind::kScalarMul, {a}, c); }
NodeId Graph::add_scalar(double c, NodeId a) { return push(OpKind::kAddScalar, {a}, c); }
NodeId Graph::reduce_mean(NodeId a) { return push(OpKind::kReduceMean, {a}); }

std::vector<NodeId> Graph::trainable_leaves() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == OpKind::kParameter) out.push_back(NodeId{i});
  }
  return out;
}

void Graph::set_leaf_value(NodeId id, Tensor value) {
  Node& n = nodes_.at(id.index);
  if (n.kind != OpKind::kParameter && n.kind != OpKind::kConstant) {
    throw std::invalid_argument("set_leaf_value: node is not a leaf");
  }
  if (value.shape() != n.value.shape()) {
    throw ShapeError("set_leaf_value: shape " + shape_str(value.shape()) + " does not match " +
                     shape_str(n.value.shape()));
  }
  n.value = std::move(value);
}

void Graph::replay() {
  for (auto& n : nodes_) {
    if (n.kind != OpKind::kParameter && n.kind != OpKind::kConstant) n.value = evaluate(n);
  }
}

namespace {

void accumulate(Tensor& slot, const Tensor& g) {
  if (slot.size() == 0) {
    slot = g;
    return;
  }
  for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += g[i];
}

}  // namespace

GradMap backward(const Graph& graph, NodeId loss) {
  const auto& nodes = graph.nodes_;
  if (loss.index >= nodes.size()) throw std::out_of_range("backward: loss id out of range");
  if (nodes[loss.index].value.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " +
                     shape_str(nodes[loss.index].value.shape()));
  }

  std::vector<Tensor> grads(loss.index + 1);
  grads[loss.index] = Tensor(nodes[loss.index].value.shape(), 1.0);

  for (std::size_t idx = loss.index + 1; idx-- > 0;) {
    const auto& n = nodes[idx];
    const Tensor& g = grads[idx];
    if (g.size() == 0 || !n.needs_grad) continue;
    auto wants = [&](std::size_t i) { return nodes[n.inputs[i].index].needs_grad; };
    auto slot = [&](std::size_t i) -> Tensor& { return grads[n.inputs[i].index]; };
    auto in = [&](std::size_t i) -> const Tensor& { return nodes[n.inputs[i].index].value; };

    switch (n.kind) {
      case OpKind::kParameter:
      case OpKind::kConstant:
        break;
      case OpKind::kMatMul: {
        Tensor tmp;
        if (wants(0)) {
          kernels::matmul_a_bt(g, in(1), tmp);
          accumulate(slot(0), tmp);
        }
        if (wants(1)) {
          kernels::matmul_at_b(in(0), g, tmp);
          accumulate(slot(1), tmp);
        }
        break;
      }
      case OpKind::kAdd:
      case OpKind::kSub: {
        const double sign = n.kind == OpKind::kAdd ? 1.0 : -1.0;
        if (wants(0)) accumulate(slot(0), g);
        if (wants(1)) {
          const Tensor& b = in(1);
          Tensor gb(b.shape());
          if (b.shape() == g.shape()) {
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] = sign * g[i];
          } else {
            for (std::size_t r = 0; r < g.rows(); ++r)
              for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += sign * g.at(r, c);
          }
          accumulate(slot(1), gb);
        }
        break;
      }
      case OpKind::kConcatCols: {
        const std::size_t ca = in(0).cols();
        if (wants(0)) accumulate(slot(0), g.col_slice(0, ca));
        if (wants(1)) accumulate(slot(1), g.col_slice(ca, g.cols()));
        break;
      }
      case OpKind::kRelu: {
        Tensor ga(g.shape());
        const Tensor& a = in(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] = a[i] > 0.0 ? g[i] : 0.0;
        accumulate(slot(0), ga);
        break;
      }
      case OpKind::kSigmoid: {
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double s = n.value[i];
          ga[i] = g[i] * s * (1.0 - s);
        }
        accumulate(slot(0), ga);
        break;
      }
      case OpKind::kMeanSqErr: {
        const Tensor& a = in(0);
        const Tensor& b = in(1);
        const double scale = 2.0 * g.item() / static_cast<double>(a.size());
        Tensor ga(a.shape());
        for (std::size_t i = 0; i < a.size(); ++i) ga[i] = scale * (a[i] - b[i]);
        if (wants(1)) {
          Tensor gb(a.shape());
          for (std::size_t i = 0; i < a.size(); ++i) gb[i] = -ga[i];
          accumulate(slot(1), gb);
        }
        if (wants(0)) accumulate(slot(0), ga);
        break;
      }
      case OpKind::kLog: {
        Tensor ga(g.shape());
        const Tensor& a = in(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] / a[i];
        accumulate(slot(0), ga);
        break;
      }
      case OpKind::kClampedLog: {
        Tensor ga(g.shape());
        const Tensor& a = in(0);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] = a[i] > n.scalar ? g[i] / a[i] : 0.0;
        accumulate(slot(0), ga);
        break;
      }
      case OpKind::kScalarMul: {
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] = n.scalar * g[i];
        accumulate(slot(0), ga);
        break;
      }
      case OpKind::kAddScalar:
        accumulate(slot(0), g);
        break;
      case OpKind::kReduceMean: {
        const Tensor& a = in(0);
        accumulate(slot(0), Tensor(a.shape(), g.item() / static_cast<double>(a.size())));
        break;
      }
    }
  }

  GradMap out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].kind != OpKind::kParameter) continue;
    if (i < grads.size() && grads[i].size() != 0) {
      out.emplace(NodeId{i}, std::move(grads[i]));
    } else {
      out.emplace(NodeId{i}, Tensor(nodes[i].value.shape(), 0.0));
    }
  }
  return out;
}

GradCheckReport grad_check(Graph& graph, NodeId loss, double tolerance, double step,
                           const BackwardFn& backward_fn) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("grad_check: tolerance must be positive");
  GradCheckReport report;
  const GradMap analytic = backward_fn(graph, loss);

  for (NodeId leaf : graph.trainable_leaves()) {
    const Tensor original = graph.value(leaf);
    const auto it = analytic.find(leaf);
    LeafCheck check{leaf, 0.0, true};
    for (std::size_t i = 0; i < original.size(); ++i) {
      Tensor probe = original;
      probe[i] = original[i] + step;
      graph.set_leaf_value(leaf, probe);
      graph.replay();
      const double up = graph.value(loss).item();
      probe[i] = original[i] - step;
      graph.set_leaf_value(leaf, probe);
      graph.replay();
      const double down = graph.value(loss).item();
      const double numeric = (up - down) / (2.0 * step);
      const double a = it == analytic.end() ? 0.0 : it->second[i];
      const double rel = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
      check.max_rel_error = std::max(check.max_rel_error, rel);
    }
    graph.set_leaf_value(leaf, original);
    check.ok = check.max_rel_error <= tolerance;
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.passed = report.passed && check.ok;
    report.leaves.push_back(check);
  }
  graph.replay();
  return report;
}

}  // namespace lrce
