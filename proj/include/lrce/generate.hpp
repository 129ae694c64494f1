#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrce/dataset.hpp"
#include "lrce/disentangle.hpp"
#include "lrce/schema.hpp"

namespace lrce {

struct GenerateRequest {
  std::vector<double> query;  // encoded feature row
  double target = 0.0;        // ŷ_t, scaled label units
  double tolerance = 0.05;
  std::size_t steps = 50;
  // Accept when f(x_s) is within tolerance of the step label instead of the
  // final target.
  bool accept_against_step_label = false;
  // Keep walking the grid and return the last passing step.
  bool last_passing = false;

  void validate() const;
};

struct PathStep {
  double alpha = 0.0;
  double label = 0.0;       // ŷ_CE fed to the decoder (or the GDL target)
  double prediction = 0.0;  // f(x_s)
  std::vector<double> x;    // encoded, categorical blocks projected
};

struct CEResult {
  bool accepted = false;
  double query_prediction = 0.0;  // ŷ_q, clamped to [0,1]
  double target = 0.0;
  std::vector<double> ce;         // accepted (or best) step, encoded
  std::optional<RawRow> ce_raw;
  std::vector<PathStep> path;
  std::size_t best_step = 0;      // path index closest to the target
  std::optional<std::size_t> accepted_step;
  double seconds = 0.0;

  double ce_prediction() const { return path.at(accepted_step.value_or(best_step)).prediction; }
};

/// (1 - alpha) * from + alpha * to.
double interpolate_label(double from, double to, double alpha);

/// Walks alpha = s/S, s = 1..S at the fixed code z_u = encode(x_q). Rejects
/// mismatched schemas, bad requests and non-finite decoder output.
CEResult generate_ce(const ConditionalAutoencoder& model, const Predictor& f, const FeatureSchema& schema,
                     const GenerateRequest& request);

/// Serializes a result. Path steps carry both encoded and raw values.
nlohmann::json ce_to_json(const CEResult& result, const FeatureSchema& schema, bool include_timing = true);

struct PreservationReport {
  double r_s1 = 0.0;
  double r_s2 = 0.0;
  std::size_t n = 0;
  double mean() const { return 0.5 * (r_s1 + r_s2); }
};

/// Pearson correlation between each query's style factors and the style
/// factors recovered from its counterfactual's raw features. Synthetic
/// fixtures only: raw rows must be the six mixed features.
PreservationReport characteristic_preservation(std::span<const std::array<double, 3>> query_factors,
                                               std::span<const RawRow> counterfactuals);

}  // namespace lrce
