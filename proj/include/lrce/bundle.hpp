#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "lrce/disentangle.hpp"
#include "lrce/gdl.hpp"
#include "lrce/model_file.hpp"
#include "lrce/regressor.hpp"
#include "lrce/schema.hpp"

namespace lrce {

/// Everything one `.lrm` file can hold: the fitted schema, the regressor,
/// and optionally the disentangled model and the GDL baseline. `extra`
/// carries workflow metadata (split settings, run config echo, ranges).
struct ModelBundle {
  FeatureSchema schema;
  std::optional<TrainedRegressor> regressor;
  std::optional<DisentangledModel> model;
  std::optional<GdlBaseline> gdl;
  nlohmann::json extra = nlohmann::json::object();

  const TrainedRegressor& require_regressor() const;
  const DisentangledModel& require_model() const;
  const GdlBaseline& require_gdl() const;

  ModelParams to_params() const;
  static ModelBundle from_params(const ModelParams& params);

  void save(const std::filesystem::path& path) const;
  static ModelBundle load(const std::filesystem::path& path);
};

}  // namespace lrce
