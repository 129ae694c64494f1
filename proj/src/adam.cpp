#include "lrce/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace lrce {

namespace {
std::vector<Shape> mlp_shapes(const Mlp& net) {
  std::vector<Shape> shapes;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    shapes.push_back(net.weights[l].shape());
    shapes.push_back(net.biases[l].shape());
  }
  return shapes;
}
}  // namespace

AdamState::AdamState(const std::vector<Shape>& shapes, AdamConfig config) : config_(config) {
  if (config.learning_rate < 0.0) throw std::invalid_argument("adam: negative learning rate");
  for (const auto& s : shapes) {
    m_.emplace_back(s, 0.0);
    v_.emplace_back(s, 0.0);
  }
}

AdamState::AdamState(const Mlp& net, AdamConfig config) : AdamState(mlp_shapes(net), config) {}

void AdamState::step(std::span<Tensor* const> params, std::span<const Tensor* const> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("adam: parameter count does not match optimizer state");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& w = *params[p];
    Tensor& m = m_[p];
    Tensor& v = v_[p];
    if (w.shape() != m.shape()) {
      throw ShapeError("adam: parameter shape " + shape_str(w.shape()) + " does not match state " +
                       shape_str(m.shape()));
    }
    const Tensor* g = grads[p];
    if (g != nullptr && g->shape() != w.shape()) {
      throw ShapeError("adam: gradient shape " + shape_str(g->shape()) + " does not match parameter " +
                       shape_str(w.shape()));
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g ? (*g)[i] : 0.0;
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

void adam_step(AdamState& state, Mlp& net, const BoundMlp& bound, const GradMap& grads) {
  std::vector<Tensor*> params;
  std::vector<const Tensor*> g;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    params.push_back(&net.weights[l]);
    params.push_back(&net.biases[l]);
  }
  if (bound.params.size() != params.size()) {
    throw std::invalid_argument("adam_step: binding does not match network");
  }
  for (NodeId id : bound.params) {
    auto it = grads.find(id);
    g.push_back(it == grads.end() ? nullptr : &it->second);
  }
  state.step(params, g);
}

}  // namespace lrce
