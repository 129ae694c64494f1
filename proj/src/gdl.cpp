#include "lrce/gdl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "lrce/adam.hpp"
#include "lrce/training.hpp"

namespace lrce {

void GdlTrainConfig::validate() const {
  if (latent_dim == 0) throw std::invalid_argument("gdl latent_dim must be >= 1");
  if (hidden.empty()) throw std::invalid_argument("gdl autoencoder needs a hidden layer");
  if (batch_size == 0) throw std::invalid_argument("gdl batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("gdl learning_rate must be >= 0");
}

nlohmann::json GdlTrainConfig::to_json() const {
  return {{"latent_dim", latent_dim}, {"hidden", hidden},   {"epochs", epochs},
          {"batch_size", batch_size}, {"learning_rate", learning_rate}, {"seed", seed}};
}

GdlTrainConfig GdlTrainConfig::from_json(const nlohmann::json& j) {
  GdlTrainConfig c;
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.hidden = j.value("hidden", c.hidden);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

void GdlSettings::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("gdl descent learning_rate must be > 0");
  if (!(lambda_prox >= 0.0)) throw std::invalid_argument("gdl lambda_prox must be >= 0");
}

nlohmann::json GdlSettings::to_json() const {
  return {{"learning_rate", learning_rate}, {"max_iterations", max_iterations}, {"lambda_prox", lambda_prox}};
}

GdlSettings GdlSettings::from_json(const nlohmann::json& j) {
  GdlSettings s;
  s.learning_rate = j.value("learning_rate", s.learning_rate);
  s.max_iterations = j.value("max_iterations", s.max_iterations);
  s.lambda_prox = j.value("lambda_prox", s.lambda_prox);
  s.validate();
  return s;
}

GdlBaseline train_gdl_baseline(const Dataset& data, const GdlTrainConfig& config, GdlSettings descent) {
  config.validate();
  descent.validate();
  if (data.size() == 0) throw std::invalid_argument("gdl: empty training set");
  GdlBaseline out;
  out.fingerprint = data.schema_fingerprint;
  out.descent = descent;
  out.encoder = init_mlp(make_spec(data.width(), config.hidden, config.latent_dim), config.seed ^ 0x61e5ULL);
  out.decoder = init_mlp(make_spec(config.latent_dim, config.hidden, data.width()), config.seed ^ 0xdec0ULL);
  AdamState adam_enc(out.encoder, AdamConfig{config.learning_rate});
  AdamState adam_dec(out.decoder, AdamConfig{config.learning_rate});
  BatchSampler sampler(data.size(), config.seed ^ 0xa17eULL);
  const std::size_t steps = batches_per_epoch(data.size(), config.batch_size);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t s = 0; s < steps; ++s) {
      const auto idx = sampler.next(config.batch_size);
      Graph g;
      const auto be = bind_mlp(out.encoder, g, true);
      const auto bd = bind_mlp(out.decoder, g, true);
      const NodeId x = g.constant(data.x.select_rows(idx));
      const NodeId rec = mlp_forward(out.decoder, bd, mlp_forward(out.encoder, be, x, g), g);
      const NodeId loss = g.mean_sq_err(x, rec);
      if (!std::isfinite(g.value(loss).item())) {
        throw TrainingDiverged("gdl autoencoder loss became non-finite at epoch " + std::to_string(epoch));
      }
      const auto grads = backward(g, loss);
      adam_step(adam_enc, out.encoder, be, grads);
      adam_step(adam_dec, out.decoder, bd, grads);
    }
  }
  return out;
}

CEResult gdl_generate(const GdlBaseline& baseline, const TrainedRegressor& f, const FeatureSchema& schema,
                      const GenerateRequest& request) {
  request.validate();
  const auto& settings = baseline.descent;
  settings.validate();
  const std::string fp = schema.fingerprint();
  if (baseline.fingerprint != fp || f.schema_fingerprint() != fp) {
    throw SchemaMismatch("gdl: baseline, regressor and schema fingerprints differ");
  }
  const std::size_t d = request.query.size();
  if (d != baseline.encoder.spec.input_width() || d != f.input_width()) {
    throw SchemaMismatch("gdl: query width does not match the models");
  }

  const auto start = std::chrono::steady_clock::now();
  CEResult out;
  out.target = request.target;
  const Tensor xq = Tensor::from_data({1, d}, request.query);
  out.query_prediction = std::clamp(f.predict(xq).front(), 0.0, 1.0);
  Tensor z = baseline.encoder.apply(xq);
  AdamState adam(std::vector<Shape>{z.shape()}, AdamConfig{settings.learning_rate});
  const Tensor target = Tensor::scalar(request.target);
  const double total = static_cast<double>(settings.max_iterations + 1);

  double best_gap = INFINITY;
  for (std::size_t it = 0; it <= settings.max_iterations; ++it) {
    Graph g;
    const NodeId zn = g.parameter(z);
    const NodeId x = mlp_forward(baseline.decoder, bind_mlp(baseline.decoder, g, false), zn, g);

    PathStep step;
    step.alpha = static_cast<double>(it + 1) / total;
    step.label = request.target;
    Tensor xs = g.value(x);
    if (!xs.all_finite()) throw TrainingDiverged("gdl: decoder produced a non-finite value");
    project_one_hot(schema, xs.data());
    step.prediction = f.predict(xs).front();
    step.x = xs.values();
    const double gap = std::abs(step.prediction - request.target);
    if (gap < best_gap) {
      best_gap = gap;
      out.best_step = out.path.size();
    }
    out.path.push_back(std::move(step));
    if (gap < request.tolerance) {
      out.accepted_step = out.path.size() - 1;
      break;
    }
    if (it == settings.max_iterations) break;

    const NodeId pred = mlp_forward(f.network(), bind_mlp(f.network(), g, false), x, g);
    const NodeId fit = g.mean_sq_err(pred, g.constant(target));
    const NodeId prox =
        g.scalar_mul(settings.lambda_prox * static_cast<double>(d), g.mean_sq_err(x, g.constant(xq)));
    const NodeId loss = g.add(fit, prox);
    if (!std::isfinite(g.value(loss).item())) throw TrainingDiverged("gdl: objective became non-finite");
    const auto grads = backward(g, loss);
    Tensor* params[] = {&z};
    const Tensor* gs[] = {&grads.at(zn)};
    adam.step(params, gs);
  }

  out.accepted = out.accepted_step.has_value();
  out.ce = out.path[out.accepted_step.value_or(out.best_step)].x;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.ce_raw = decode_row(schema, out.ce);
  return out;
}

}  // namespace lrce
