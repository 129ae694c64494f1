#include "lrce/bundle.hpp"

#include <stdexcept>

namespace lrce {

namespace {

ModelFormatError missing(const std::string& what) {
  return ModelFormatError(ModelFormatError::Kind::kMissingSection,
                          "model file has no " + what + " (run the training step that produces it)");
}

nlohmann::json history_json(const std::vector<LossRecord>& history) {
  nlohmann::json h = nlohmann::json::array();
  for (const auto& r : history) {
    h.push_back({{"reconstruction", r.reconstruction},
                 {"adversarial", r.adversarial},
                 {"discriminator", r.discriminator},
                 {"total", r.total}});
  }
  return h;
}

std::vector<LossRecord> history_from(const nlohmann::json& h) {
  std::vector<LossRecord> out;
  for (const auto& r : h) {
    out.push_back({r.at("reconstruction").get<double>(), r.at("adversarial").get<double>(),
                   r.at("discriminator").get<double>(), r.at("total").get<double>()});
  }
  return out;
}

}  // namespace

const TrainedRegressor& ModelBundle::require_regressor() const {
  if (!regressor) throw missing("regressor");
  return *regressor;
}

const DisentangledModel& ModelBundle::require_model() const {
  if (!model) throw missing("disentangled model");
  return *model;
}

const GdlBaseline& ModelBundle::require_gdl() const {
  if (!gdl) throw missing("GDL baseline");
  return *gdl;
}

ModelParams ModelBundle::to_params() const {
  ModelParams p;
  p.schema_fingerprint = schema.fingerprint();
  p.metadata["schema"] = schema.to_json();
  p.metadata["extra"] = extra;
  if (regressor) {
    p.put("regressor", regressor->network());
    p.metadata["regressor"] = regressor->metadata().to_json();
  }
  if (model) {
    if (model->fingerprint != p.schema_fingerprint) {
      throw SchemaMismatch("bundle: disentangled model was trained on a different schema");
    }
    p.put("encoder", model->encoder);
    p.put("decoder", model->decoder);
    p.put("adversary", model->adversary);
    p.put("discriminator", model->discriminator);
    p.metadata["train_config"] = model->config.to_json();
    p.metadata["history"] = history_json(model->history);
  }
  if (gdl) {
    if (gdl->fingerprint != p.schema_fingerprint) {
      throw SchemaMismatch("bundle: GDL baseline was trained on a different schema");
    }
    p.put("gdl_encoder", gdl->encoder);
    p.put("gdl_decoder", gdl->decoder);
    p.metadata["gdl_descent"] = gdl->descent.to_json();
  }
  return p;
}

ModelBundle ModelBundle::from_params(const ModelParams& p) {
  ModelBundle b;
  try {
    b.schema = FeatureSchema::from_json(p.metadata.at("schema"));
    if (b.schema.fingerprint() != p.schema_fingerprint) {
      throw ModelFormatError(ModelFormatError::Kind::kFingerprint,
                             "embedded schema does not match the file's schema fingerprint");
    }
    b.extra = p.metadata.value("extra", nlohmann::json::object());
    if (p.has("regressor")) {
      b.regressor.emplace(p.section("regressor"), p.schema_fingerprint,
                          RegressorMetadata::from_json(p.metadata.at("regressor")));
    }
    if (p.has("encoder")) {
      DisentangledModel m;
      m.encoder = p.section("encoder");
      m.decoder = p.section("decoder");
      m.adversary = p.section("adversary");
      m.discriminator = p.section("discriminator");
      m.config = TrainConfig::from_json(p.metadata.at("train_config"));
      m.history = history_from(p.metadata.at("history"));
      m.fingerprint = p.schema_fingerprint;
      b.model = std::move(m);
    }
    if (p.has("gdl_encoder")) {
      GdlBaseline g;
      g.encoder = p.section("gdl_encoder");
      g.decoder = p.section("gdl_decoder");
      g.descent = GdlSettings::from_json(p.metadata.at("gdl_descent"));
      g.fingerprint = p.schema_fingerprint;
      b.gdl = std::move(g);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(ModelFormatError::Kind::kCorrupt, std::string("model metadata: ") + e.what());
  }
  return b;
}

void ModelBundle::save(const std::filesystem::path& path) const { save_params(to_params(), path); }

ModelBundle ModelBundle::load(const std::filesystem::path& path) { return from_params(load_params(path)); }

}  // namespace lrce
