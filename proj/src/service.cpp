#include "lrce/service.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include <httplib.h>

namespace lrce {

namespace {

ApiResponse error(int status, const std::string& message) { return {status, {{"error", message}}}; }

ApiResponse not_ready() { return error(503, "model not loaded yet"); }

nlohmann::json raw_json(const FeatureSchema& schema, const RawRow& row) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < schema.features.size(); ++i) {
    std::visit([&](const auto& v) { j[schema.features[i].name] = v; }, row.features[i]);
  }
  return j;
}

const std::set<std::string> kGenerateKeys = {"query", "target", "tol", "steps", "method",
                                             "accept_against_step_label", "last_passing"};

}  // namespace

void Service::load(std::shared_ptr<const ModelBundle> bundle, std::optional<RawTable> table) {
  if (!bundle) throw std::invalid_argument("service: no bundle");
  bundle->require_regressor();
  bundle->require_model();
  auto snap = std::make_shared<Snapshot>();
  snap->bundle = std::move(bundle);
  if (table) {
    snap->parts.emplace("all", bundle_rows(*snap->bundle, *table, SplitPart::kAll));
    if (snap->bundle->extra.contains("split")) {
      snap->parts.emplace("train", bundle_rows(*snap->bundle, *table, SplitPart::kTrain));
      snap->parts.emplace("test", bundle_rows(*snap->bundle, *table, SplitPart::kTest));
    }
  }
  std::lock_guard lock(mutex_);
  snapshot_ = std::move(snap);
}

std::shared_ptr<const Service::Snapshot> Service::snapshot() const {
  std::lock_guard lock(mutex_);
  return snapshot_;
}

bool Service::ready() const { return snapshot() != nullptr; }

ApiResponse Service::health() const {
  const auto snap = snapshot();
  if (!snap) return {503, {{"status", "loading"}, {"version", kVersion}}};
  return {200,
          {{"status", "ok"},
           {"version", kVersion},
           {"fingerprint", snap->bundle->schema.fingerprint()},
           {"methods", snap->bundle->gdl ? nlohmann::json{"ours", "gdl"} : nlohmann::json{"ours"}}}};
}

ApiResponse Service::schema() const {
  const auto snap = snapshot();
  if (!snap) return not_ready();
  const auto& b = *snap->bundle;
  nlohmann::json j = b.schema.to_json();
  j["fingerprint"] = b.schema.fingerprint();
  j["encoded_width"] = b.schema.encoded_width();
  j["label_range"] = {0.0, 1.0};
  j["target_range"] = {b.schema.target_min, b.schema.target_max};
  j["feature_ranges"] = b.extra.value("feature_ranges", nlohmann::json::object());
  return {200, j};
}

ApiResponse Service::rows(const std::string& split, const std::string& limit) const {
  const auto snap = snapshot();
  if (!snap) return not_ready();
  const std::string part = split.empty() ? "test" : split;
  if (part != "train" && part != "test" && part != "all") return error(400, "split must be train, test or all");
  std::size_t k = 20;
  if (!limit.empty()) {
    const auto [ptr, ec] = std::from_chars(limit.data(), limit.data() + limit.size(), k);
    if (ec != std::errc() || ptr != limit.data() + limit.size()) return error(400, "limit must be an integer");
  }
  const auto it = snap->parts.find(part);
  if (it == snap->parts.end()) return error(404, "no rows available for split '" + part + "' (start with --data)");
  const Dataset& ds = it->second;
  const auto& schema = snap->bundle->schema;
  const std::size_t n = std::min(k, ds.size());
  std::vector<std::size_t> first(n);
  for (std::size_t i = 0; i < n; ++i) first[i] = i;
  const Tensor x = ds.x.select_rows(first);
  const auto pred = n ? snap->bundle->require_regressor().predict(x) : std::vector<double>{};
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({{"index", i},
                   {"raw", raw_json(schema, ds.raw[i])},
                   {"encoded", std::vector<double>(x.row(i).begin(), x.row(i).end())},
                   {"target", ds.y[i]},
                   {"target_raw", *ds.raw[i].target},
                   {"prediction", pred[i]}});
  }
  return {200, {{"split", part}, {"rows", out}}};
}

ApiResponse Service::generate(const std::string& body) const {
  const auto snap = snapshot();
  if (!snap) return not_ready();
  const auto& bundle = *snap->bundle;

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return error(400, "request body is not valid JSON");
  }
  if (!j.is_object()) return error(400, "request body must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kGenerateKeys.contains(key)) return error(400, "unknown field '" + key + "'");
  }
  if (!j.contains("query")) return error(400, "missing field 'query'");
  if (!j.contains("target") || !j["target"].is_number()) return error(400, "'target' must be a number");

  GenerateRequest req;
  req.target = j["target"].get<double>();
  if (!(req.target >= 0.0 && req.target <= 1.0)) return error(400, "'target' must be in [0,1]");
  req.tolerance = 0.05;
  if (j.contains("tol")) {
    if (!j["tol"].is_number() || !(j["tol"].get<double>() > 0.0)) return error(400, "'tol' must be a number > 0");
    req.tolerance = j["tol"].get<double>();
  }
  if (j.contains("steps")) {
    if (!j["steps"].is_number_integer() || j["steps"].get<long long>() < 1 || j["steps"].get<long long>() > 10000) {
      return error(400, "'steps' must be an integer in [1, 10000]");
    }
    req.steps = j["steps"].get<std::size_t>();
  }
  for (const char* flag : {"accept_against_step_label", "last_passing"}) {
    if (j.contains(flag) && !j[flag].is_boolean()) return error(400, std::string("'") + flag + "' must be a boolean");
  }
  req.accept_against_step_label = j.value("accept_against_step_label", false);
  req.last_passing = j.value("last_passing", false);
  std::string method = "ours";
  if (j.contains("method")) {
    if (!j["method"].is_string()) return error(400, "'method' must be a string");
    method = j["method"].get<std::string>();
    if (method != "ours" && method != "gdl") return error(400, "'method' must be ours or gdl");
    if (method == "gdl" && !bundle.gdl) return error(400, "this model has no GDL baseline");
  }

  try {
    req.query = encode_query(bundle.schema, j["query"]);
  } catch (const QueryError& e) {
    return error(e.kind() == QueryError::Kind::kSchema ? 400 : 422, e.what());
  }

  try {
    const CEResult result = run_method(bundle, method, req);
    nlohmann::json out = ce_to_json(result, bundle.schema, true);
    out["method"] = method;
    return {200, out};
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
}

void Service::mount(httplib::Server& server, const std::optional<std::filesystem::path>& static_dir) const {
  auto send = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get("/api/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
  server.Get("/api/schema", [this, send](const httplib::Request&, httplib::Response& res) { send(res, schema()); });
  server.Get("/api/rows", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, rows(req.get_param_value("split"), req.get_param_value("limit")));
  });
  server.Post("/api/generate",
              [this, send](const httplib::Request& req, httplib::Response& res) { send(res, generate(req.body)); });
  if (static_dir) server.set_mount_point("/", static_dir->string());
}

}  // namespace lrce
