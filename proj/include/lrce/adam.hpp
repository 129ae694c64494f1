#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lrce/graph.hpp"
#include "lrce/mlp.hpp"
#include "lrce/tensor.hpp"

namespace lrce {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates for a fixed list of parameter tensors.
class AdamState {
 public:
  AdamState(const std::vector<Shape>& shapes, AdamConfig config);
  explicit AdamState(const Mlp& net, AdamConfig config);

  /// One bias-corrected Adam update. `grads[i] == nullptr` means a zero
  /// gradient for params[i]; the moments still decay.
  void step(std::span<Tensor* const> params, std::span<const Tensor* const> grads);

  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::uint64_t steps_ = 0;
};

/// Applies the gradients collected for `bound` to `net`.
void adam_step(AdamState& state, Mlp& net, const BoundMlp& bound, const GradMap& grads);

}  // namespace lrce
