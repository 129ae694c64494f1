#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrce/dataset.hpp"
#include "lrce/disentangle.hpp"
#include "lrce/generate.hpp"
#include "lrce/stats.hpp"

namespace lrce {

/// One attempted query. `result` is empty when generation threw; the
/// attempt still counts toward the validity denominator.
struct Attempt {
  std::vector<double> query;
  std::optional<CEResult> result;
  std::string error;

  bool accepted() const { return result && result->accepted; }
};

/// L2 distance between two encoded rows.
double proximity(std::span<const double> query, std::span<const double> ce);
/// L1 norm of the change vector.
double sparsity(std::span<const double> query, std::span<const double> ce);
/// MSE(x, decode(encode(x), f(x))) under the disentangled model, with f(x)
/// clamped into [0,1].
double reconstruction_error(std::span<const double> x, const ConditionalAutoencoder& model, const Predictor& f);

struct MetricRow {
  std::string method;
  std::size_t attempted = 0;
  std::size_t accepted = 0;
  std::size_t errors = 0;
  MeanSd seconds;  // over attempts that returned a result
  double validity = 0.0;
  // Over accepted counterfactuals only; absent when nothing was accepted.
  std::optional<MeanSd> proximity;
  std::optional<MeanSd> sparsity;
  std::optional<MeanSd> reconstruction;

  nlohmann::json to_json() const;
};

MetricRow metric_suite(const std::string& method, std::span<const Attempt> attempts,
                       const ConditionalAutoencoder& manifold, const Predictor& f);

}  // namespace lrce
