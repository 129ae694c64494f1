#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrce/metrics.hpp"

namespace lrce {

struct BenchmarkConfig {
  double delta = 0.2;  // target = min(1, ŷ_q + delta)
  double tolerance = 0.05;
  std::size_t steps = 50;
  std::size_t max_queries = 0;  // 0: every row

  void validate() const;
  nlohmann::json to_json() const;
};

/// A counterfactual generator under test.
struct Method {
  std::string name;
  std::function<CEResult(const GenerateRequest&)> run;
};

struct DetailRow {
  std::string method;
  std::size_t query = 0;
  bool accepted = false;
  std::string error;
  double query_prediction = 0.0;
  double target = 0.0;
  double ce_prediction = 0.0;
  double seconds = 0.0;
  std::size_t path_length = 0;
  double proximity = 0.0;
  double sparsity = 0.0;
  double proximity_raw = 0.0;
  double sparsity_raw = 0.0;
  double reconstruction = 0.0;
};

struct BenchmarkReport {
  nlohmann::json config;
  std::vector<MetricRow> rows;
  std::vector<DetailRow> details;

  const MetricRow& row(const std::string& method) const;
  nlohmann::json to_json() const;
  /// Writes report.json, report.csv and details.csv into `dir`.
  void write(const std::filesystem::path& dir) const;
};

/// Runs every method over the same queries, one after another on the
/// calling thread. Errors inside a method are recorded as failed attempts.
BenchmarkReport benchmark(std::span<const Method> methods, const Tensor& queries, const Predictor& f,
                          const ConditionalAutoencoder& manifold, const FeatureSchema& schema,
                          const BenchmarkConfig& config);

}  // namespace lrce
