#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrce/dataset.hpp"
#include "lrce/mlp.hpp"

namespace lrce {

struct RegressorConfig {
  std::vector<std::size_t> hidden = {64, 64, 64};
  std::size_t epochs = 100;
  std::size_t batch_size = 100;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static RegressorConfig from_json(const nlohmann::json& j);
};

struct RegressorMetadata {
  RegressorConfig config;
  double train_mse = 0.0;
  std::optional<double> test_mse;

  nlohmann::json to_json() const;
  static RegressorMetadata from_json(const nlohmann::json& j);
};

/// The frozen regressor f. There is no mutating API: a new one can only be
/// produced by train_regressor or by loading a model file.
class TrainedRegressor final : public Predictor {
 public:
  TrainedRegressor(Mlp net, std::string schema_fingerprint, RegressorMetadata metadata);

  std::vector<double> predict(const Tensor& x) const override;
  double predict_one(std::span<const double> row) const;
  std::size_t input_width() const override { return net_.spec.input_width(); }
  const std::string& schema_fingerprint() const override { return fingerprint_; }

  const Mlp& network() const { return net_; }
  const RegressorMetadata& metadata() const { return metadata_; }

 private:
  Mlp net_;
  std::string fingerprint_;
  RegressorMetadata metadata_;
};

/// Minimizes MSE(y, f(x)) with Adam. Uses `train.y` (the original labels).
/// Aborts with TrainingDiverged if the loss becomes non-finite.
TrainedRegressor train_regressor(const Dataset& train, const RegressorConfig& config,
                                 const Dataset* test = nullptr);

double mean_squared_error(std::span<const double> a, std::span<const double> b);

}  // namespace lrce
