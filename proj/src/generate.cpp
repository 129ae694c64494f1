#include "lrce/generate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "lrce/stats.hpp"
#include "lrce/synthetic.hpp"

namespace lrce {

void GenerateRequest::validate() const {
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  if (steps == 0) throw std::invalid_argument("steps must be >= 1");
  if (!(target >= 0.0 && target <= 1.0)) {
    throw std::invalid_argument("target " + std::to_string(target) + " outside [0,1]");
  }
  if (query.empty()) throw std::invalid_argument("empty query");
  for (double v : query) {
    if (!std::isfinite(v)) throw std::invalid_argument("query contains a non-finite value");
  }
}

double interpolate_label(double from, double to, double alpha) { return (1.0 - alpha) * from + alpha * to; }

CEResult generate_ce(const ConditionalAutoencoder& model, const Predictor& f, const FeatureSchema& schema,
                     const GenerateRequest& request) {
  request.validate();
  const std::string fp = schema.fingerprint();
  if (model.schema_fingerprint() != fp || f.schema_fingerprint() != fp) {
    throw SchemaMismatch("generate: model, regressor and schema fingerprints differ");
  }
  if (request.query.size() != model.feature_width() || request.query.size() != f.input_width()) {
    throw SchemaMismatch("generate: query has " + std::to_string(request.query.size()) +
                         " encoded columns, model expects " + std::to_string(model.feature_width()));
  }

  const auto start = std::chrono::steady_clock::now();
  CEResult out;
  out.target = request.target;
  const Tensor xq = Tensor::from_data({1, request.query.size()}, request.query);
  out.query_prediction = std::clamp(f.predict(xq).front(), 0.0, 1.0);
  const Tensor z = model.encode(xq);

  double best_gap = INFINITY;
  for (std::size_t s = 1; s <= request.steps; ++s) {
    PathStep step;
    step.alpha = static_cast<double>(s) / static_cast<double>(request.steps);
    step.label = interpolate_label(out.query_prediction, request.target, step.alpha);
    const double label[] = {step.label};
    Tensor xs = model.decode(z, label);
    if (!xs.all_finite()) throw DomainError("generate: decoder produced a non-finite value");
    project_one_hot(schema, xs.data());
    step.prediction = f.predict(xs).front();
    step.x = xs.values();

    const double gap = std::abs(step.prediction - request.target);
    if (gap < best_gap) {
      best_gap = gap;
      out.best_step = out.path.size();
    }
    const double reference = request.accept_against_step_label ? step.label : request.target;
    const bool passes = std::abs(step.prediction - reference) < request.tolerance;
    out.path.push_back(std::move(step));
    if (passes) {
      out.accepted_step = out.path.size() - 1;
      if (!request.last_passing) break;
    }
  }

  out.accepted = out.accepted_step.has_value();
  out.ce = out.path[out.accepted_step.value_or(out.best_step)].x;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.ce_raw = decode_row(schema, out.ce);
  return out;
}

namespace {

nlohmann::json raw_to_json(const FeatureSchema& schema, const RawRow& row) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < schema.features.size(); ++i) {
    std::visit([&](const auto& v) { j[schema.features[i].name] = v; }, row.features[i]);
  }
  return j;
}

}  // namespace

nlohmann::json ce_to_json(const CEResult& result, const FeatureSchema& schema, bool include_timing) {
  nlohmann::json path = nlohmann::json::array();
  for (const auto& s : result.path) {
    path.push_back({{"alpha", s.alpha},
                    {"label", s.label},
                    {"prediction", s.prediction},
                    {"x", s.x},
                    {"raw", raw_to_json(schema, decode_row(schema, s.x))}});
  }
  nlohmann::json j{{"accepted", result.accepted},
                   {"query_prediction", result.query_prediction},
                   {"target", result.target},
                   {"ce", result.ce},
                   {"ce_prediction", result.ce_prediction()},
                   {"best_step", result.best_step},
                   {"accepted_step", result.accepted_step ? nlohmann::json(*result.accepted_step) : nlohmann::json()},
                   {"path", std::move(path)}};
  if (result.ce_raw) j["ce_raw"] = raw_to_json(schema, *result.ce_raw);
  if (schema.fitted) {
    j["query_prediction_raw"] = schema.unscale_target(result.query_prediction);
    j["target_raw"] = schema.unscale_target(result.target);
  }
  if (include_timing) j["seconds"] = result.seconds;
  return j;
}

PreservationReport characteristic_preservation(std::span<const std::array<double, 3>> query_factors,
                                               std::span<const RawRow> counterfactuals) {
  if (query_factors.size() != counterfactuals.size()) {
    throw std::invalid_argument("characteristic_preservation: one counterfactual per query required");
  }
  if (query_factors.size() < 3) throw std::invalid_argument("characteristic_preservation: need >= 3 pairs");
  std::vector<double> q1, q2, c1, c2;
  for (std::size_t i = 0; i < query_factors.size(); ++i) {
    const auto& raw = counterfactuals[i].features;
    if (raw.size() != kSyntheticFeatures) {
      throw std::invalid_argument("characteristic_preservation: only defined on the synthetic fixture");
    }
    std::vector<double> values;
    for (const auto& v : raw) values.push_back(std::get<double>(v));
    const auto est = recover_factors(values);
    q1.push_back(query_factors[i][1]);
    q2.push_back(query_factors[i][2]);
    c1.push_back(est[1]);
    c2.push_back(est[2]);
  }
  return {pearson(q1, c1), pearson(q2, c2), query_factors.size()};
}

}  // namespace lrce
