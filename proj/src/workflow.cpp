#include "lrce/workflow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "lrce/dataset.hpp"

namespace lrce {

namespace {

std::vector<RawRow> pick(const std::vector<RawRow>& rows, const std::vector<std::size_t>& idx) {
  std::vector<RawRow> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(rows[i]);
  return out;
}

nlohmann::json feature_ranges(const FeatureSchema& schema, std::span<const RawRow> rows) {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t f = 0; f < schema.features.size(); ++f) {
    if (schema.features[f].kind != FeatureKind::kContinuous) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : rows) {
      const double v = std::get<double>(r.features[f]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    out[schema.features[f].name] = {lo, hi};
  }
  return out;
}

}  // namespace

FeatureSchema declared_schema(const RawTable& table, const std::optional<std::filesystem::path>& schema_file,
                              const std::string& target) {
  if (schema_file) {
    std::ifstream in(*schema_file);
    if (!in) throw DataError("cannot read schema file " + schema_file->string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("schema file " + schema_file->string() + " is not valid JSON: " + e.what());
    }
    FeatureSchema s = FeatureSchema::from_json(j);
    s.fitted = false;  // statistics are always refitted on the training split
    return s;
  }
  if (table.columns.empty()) throw DataError("CSV has no columns");
  return infer_schema(table, target.empty() ? table.columns.back() : target);
}

PreparedRows prepare_rows(const FeatureSchema& declared, const RawTable& table, const SplitSpec& split) {
  split.validate();
  const auto all = parse_rows(declared, table, true);
  PreparedRows out;
  for (auto i : trim_extremes(all, split.trim_fraction)) out.rows.push_back(all[i]);
  std::tie(out.train, out.test) = split_indices(out.rows.size(), split.train_fraction, split.seed);
  return out;
}

SplitPart parse_split_part(const std::string& name) {
  if (name == "train") return SplitPart::kTrain;
  if (name == "test") return SplitPart::kTest;
  if (name == "all") return SplitPart::kAll;
  throw std::invalid_argument("split must be one of train, test, all (got '" + name + "')");
}

ModelBundle train_regressor_bundle(const RawTable& table, const FeatureSchema& declared, const RunConfig& config,
                                   std::ostream* log) {
  const auto prepared = prepare_rows(declared, table, config.split);
  const auto train_rows = pick(prepared.rows, prepared.train);
  const auto test_rows = pick(prepared.rows, prepared.test);

  ModelBundle bundle;
  bundle.schema = fit_schema(declared, train_rows);
  const Dataset train = encode_dataset(bundle.schema, train_rows);
  std::size_t clamped = 0;
  const Dataset test = encode_dataset(bundle.schema, test_rows, &clamped);
  bundle.regressor = train_regressor(train, config.regressor, &test);

  bundle.extra["split"] = config.split.to_json();
  bundle.extra["rows"] = {{"input", table.size()},
                          {"after_trim", prepared.rows.size()},
                          {"train", prepared.train.size()},
                          {"test", prepared.test.size()}};
  bundle.extra["feature_ranges"] = feature_ranges(bundle.schema, train_rows);
  bundle.extra["test_targets_clamped"] = clamped;
  bundle.extra["run_config"]["train-regressor"] = config.to_json();
  if (log) {
    *log << "regressor: train mse " << bundle.regressor->metadata().train_mse << ", test mse "
         << *bundle.regressor->metadata().test_mse << " (" << prepared.train.size() << " / "
         << prepared.test.size() << " rows)\n";
  }
  return bundle;
}

Dataset bundle_rows(const ModelBundle& bundle, const RawTable& table, SplitPart part) {
  if (part == SplitPart::kAll) {
    return encode_dataset(bundle.schema, parse_rows(bundle.schema, table, true));
  }
  if (!bundle.extra.contains("split")) throw DataError("model file does not record a train/test split");
  const auto prepared = prepare_rows(bundle.schema, table, SplitSpec::from_json(bundle.extra["split"]));
  const auto& idx = part == SplitPart::kTrain ? prepared.train : prepared.test;
  return encode_dataset(bundle.schema, pick(prepared.rows, idx));
}

void train_ce_bundle(ModelBundle& bundle, const RawTable& table, const RunConfig& config, bool with_gdl,
                     std::ostream* log) {
  const auto& f = bundle.require_regressor();
  const Dataset train = bundle_rows(bundle, table, SplitPart::kTrain);
  std::size_t clamped = 0;
  const Dataset dt = relabel_with_model(train, f, &clamped);
  if (log) *log << "relabel: " << clamped << " of " << dt.size() << " predictions clamped into [0,1]\n";
  bundle.extra["relabel_clamped"] = clamped;

  bundle.model = train_disentangled(dt, config.train);
  if (log && !bundle.model->history.empty()) {
    const auto& h = bundle.model->history.back();
    *log << "disentangle: final epoch L_rec " << h.reconstruction << ", L_adv " << h.adversarial << ", L_d "
         << h.discriminator << ", L " << h.total << '\n';
  }
  if (with_gdl) {
    bundle.gdl = train_gdl_baseline(dt, config.gdl, config.gdl_descent);
    bundle.extra["gdl_train_config"] = config.gdl.to_json();
  } else {
    bundle.gdl.reset();
  }
  bundle.extra["run_config"]["train-ce"] = config.to_json();
}

std::vector<double> encode_query(const FeatureSchema& schema, const nlohmann::json& query) {
  using K = QueryError::Kind;
  if (query.is_array()) {
    if (query.size() != schema.encoded_width()) {
      throw QueryError(K::kSchema, "encoded query has " + std::to_string(query.size()) + " values, schema needs " +
                                       std::to_string(schema.encoded_width()));
    }
    std::vector<double> x;
    for (const auto& v : query) {
      if (!v.is_number()) throw QueryError(K::kSchema, "encoded query values must be numbers");
      x.push_back(v.get<double>());
    }
    for (const auto& b : schema.one_hot_blocks()) {
      double sum = 0.0;
      for (std::size_t i = b.offset; i < b.offset + b.size; ++i) {
        if (x[i] != 0.0 && x[i] != 1.0) throw QueryError(K::kUnencodable, "one-hot entries must be 0 or 1");
        sum += x[i];
      }
      if (sum != 1.0) throw QueryError(K::kUnencodable, "each one-hot block must contain exactly one 1");
    }
    return x;
  }
  if (!query.is_object()) throw QueryError(K::kSchema, "query must be an object of feature values or an array");
  for (const auto& [key, _] : query.items()) {
    const bool known = std::any_of(schema.features.begin(), schema.features.end(),
                                   [&](const FeatureSpec& f) { return f.name == key; });
    if (!known) throw QueryError(K::kSchema, "unknown feature '" + key + "'");
  }
  RawRow row;
  for (const auto& f : schema.features) {
    if (!query.contains(f.name)) throw QueryError(K::kSchema, "missing feature '" + f.name + "'");
    const auto& v = query.at(f.name);
    if (f.kind == FeatureKind::kContinuous) {
      if (!v.is_number()) throw QueryError(K::kSchema, "feature '" + f.name + "' must be a number");
      row.features.emplace_back(v.get<double>());
    } else {
      if (!v.is_string()) throw QueryError(K::kSchema, "feature '" + f.name + "' must be a category string");
      row.features.emplace_back(v.get<std::string>());
    }
  }
  try {
    return encode_row(schema, row);
  } catch (const DataError& e) {
    throw QueryError(K::kUnencodable, e.what());
  }
}

CEResult run_method(const ModelBundle& bundle, const std::string& method, const GenerateRequest& request) {
  if (method == "ours") return generate_ce(bundle.require_model(), bundle.require_regressor(), bundle.schema, request);
  if (method == "gdl") return gdl_generate(bundle.require_gdl(), bundle.require_regressor(), bundle.schema, request);
  throw std::invalid_argument("unknown method '" + method + "' (expected ours or gdl)");
}

BenchmarkReport run_benchmark(const ModelBundle& bundle, const Dataset& queries, const BenchmarkConfig& config) {
  const auto& model = bundle.require_model();
  const auto& f = bundle.require_regressor();
  std::vector<Method> methods;
  methods.push_back({"ours", [&](const GenerateRequest& r) { return generate_ce(model, f, bundle.schema, r); }});
  if (bundle.gdl) {
    methods.push_back({"gdl", [&](const GenerateRequest& r) { return gdl_generate(*bundle.gdl, f, bundle.schema, r); }});
  }
  auto report = benchmark(methods, queries.x, f, model, bundle.schema, config);
  report.config["schema_fingerprint"] = bundle.schema.fingerprint();
  return report;
}

}  // namespace lrce
