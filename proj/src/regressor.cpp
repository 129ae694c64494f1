#include "lrce/regressor.hpp"

#include <cmath>
#include <stdexcept>

#include "lrce/adam.hpp"
#include "lrce/training.hpp"

namespace lrce {

void RegressorConfig::validate() const {
  if (hidden.empty()) throw std::invalid_argument("regressor needs at least one hidden layer");
  if (batch_size == 0) throw std::invalid_argument("regressor batch size must be >= 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("regressor learning rate must be >= 0");
}

nlohmann::json RegressorConfig::to_json() const {
  return {{"hidden", hidden},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"seed", seed}};
}

RegressorConfig RegressorConfig::from_json(const nlohmann::json& j) {
  RegressorConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

nlohmann::json RegressorMetadata::to_json() const {
  nlohmann::json j{{"config", config.to_json()}, {"train_mse", train_mse}};
  if (test_mse) j["test_mse"] = *test_mse;
  return j;
}

RegressorMetadata RegressorMetadata::from_json(const nlohmann::json& j) {
  RegressorMetadata m;
  m.config = RegressorConfig::from_json(j.at("config"));
  m.train_mse = j.at("train_mse").get<double>();
  if (j.contains("test_mse")) m.test_mse = j.at("test_mse").get<double>();
  return m;
}

TrainedRegressor::TrainedRegressor(Mlp net, std::string schema_fingerprint, RegressorMetadata metadata)
    : net_(std::move(net)), fingerprint_(std::move(schema_fingerprint)), metadata_(std::move(metadata)) {
  if (net_.spec.output_width() != 1) throw std::invalid_argument("regressor must have a single output");
}

std::vector<double> TrainedRegressor::predict(const Tensor& x) const {
  const Tensor out = net_.apply(x);
  return {out.data().begin(), out.data().end()};
}

double TrainedRegressor::predict_one(std::span<const double> row) const {
  return net_.apply(Tensor::from_data({1, row.size()}, {row.begin(), row.end()})).item();
}

double mean_squared_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("mean_squared_error: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

TrainedRegressor train_regressor(const Dataset& train, const RegressorConfig& config, const Dataset* test) {
  config.validate();
  Mlp net = init_mlp(make_spec(train.width(), config.hidden, 1), config.seed);
  AdamState adam(net, AdamConfig{config.learning_rate});
  BatchSampler sampler(train.size(), config.seed ^ 0x5eedULL);
  const std::size_t steps = batches_per_epoch(train.size(), config.batch_size);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t s = 0; s < steps; ++s) {
      const auto idx = sampler.next(config.batch_size);
      std::vector<double> yb;
      yb.reserve(idx.size());
      for (auto i : idx) yb.push_back(train.y[i]);
      Graph g;
      const auto bound = bind_mlp(net, g, true);
      const NodeId x = g.constant(train.x.select_rows(idx));
      const NodeId target = g.constant(Tensor::column(yb));
      const NodeId loss = g.mean_sq_err(mlp_forward(net, bound, x, g), target);
      if (!std::isfinite(g.value(loss).item())) {
        throw TrainingDiverged("regressor loss became non-finite at epoch " + std::to_string(epoch));
      }
      adam_step(adam, net, bound, backward(g, loss));
    }
  }

  RegressorMetadata meta;
  meta.config = config;
  meta.train_mse = mean_squared_error(net.apply(train.x).values(), train.y);
  if (test) meta.test_mse = mean_squared_error(net.apply(test->x).values(), test->y);
  return TrainedRegressor(std::move(net), train.schema_fingerprint, std::move(meta));
}

}  // namespace lrce
