#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrce/dataset.hpp"
#include "lrce/generate.hpp"
#include "lrce/mlp.hpp"
#include "lrce/regressor.hpp"

namespace lrce {

// Baseline: gradient descent over the latent code of a plain autoencoder.

struct GdlTrainConfig {
  std::size_t latent_dim = 2;
  std::vector<std::size_t> hidden = {64, 64, 64};
  std::size_t epochs = 100;
  std::size_t batch_size = 100;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static GdlTrainConfig from_json(const nlohmann::json& j);
};

struct GdlSettings {
  double learning_rate = 0.01;  // Adam on z
  std::size_t max_iterations = 1000;
  double lambda_prox = 0.001;

  void validate() const;
  nlohmann::json to_json() const;
  static GdlSettings from_json(const nlohmann::json& j);
};

struct GdlBaseline {
  Mlp encoder;
  Mlp decoder;
  std::string fingerprint;
  GdlSettings descent;
};

/// Trains the plain autoencoder on MSE(x, dec(enc(x))) over `data.x`.
GdlBaseline train_gdl_baseline(const Dataset& data, const GdlTrainConfig& config, GdlSettings descent = {});

/// Starting from z = enc(x_q), minimizes
///   (f(dec z) - target)^2 + lambda_prox * ||dec z - x_q||^2
/// with Adam. Each iteration first checks the projected decode against the
/// target and stops on success, so max_iterations = 0 evaluates the
/// starting point only. Path alphas are iteration fractions.
CEResult gdl_generate(const GdlBaseline& baseline, const TrainedRegressor& f, const FeatureSchema& schema,
                      const GenerateRequest& request);

}  // namespace lrce
