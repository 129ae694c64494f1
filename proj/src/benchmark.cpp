#include "lrce/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace lrce {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Raw-unit distances: continuous features differ by value, categorical
// features count 1 when the category changed.
std::pair<double, double> raw_distances(const FeatureSchema& schema, const RawRow& a, const RawRow& b) {
  double l2 = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i < schema.features.size(); ++i) {
    double diff = 0.0;
    if (schema.features[i].kind == FeatureKind::kContinuous) {
      diff = std::get<double>(b.features[i]) - std::get<double>(a.features[i]);
    } else {
      diff = std::get<std::string>(a.features[i]) == std::get<std::string>(b.features[i]) ? 0.0 : 1.0;
    }
    l2 += diff * diff;
    l1 += std::abs(diff);
  }
  return {std::sqrt(l2), l1};
}

}  // namespace

void BenchmarkConfig::validate() const {
  if (!std::isfinite(delta)) throw std::invalid_argument("delta must be finite");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  if (steps == 0) throw std::invalid_argument("steps must be >= 1");
}

nlohmann::json BenchmarkConfig::to_json() const {
  return {{"delta", delta}, {"tolerance", tolerance}, {"steps", steps}, {"max_queries", max_queries}};
}

const MetricRow& BenchmarkReport::row(const std::string& method) const {
  for (const auto& r : rows) {
    if (r.method == method) return r;
  }
  throw std::out_of_range("no benchmark row for method '" + method + "'");
}

nlohmann::json BenchmarkReport::to_json() const {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& r : rows) methods.push_back(r.to_json());
  return {{"config", config}, {"methods", methods}};
}

void BenchmarkReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json");
    if (!out) throw std::runtime_error("cannot write " + (dir / "report.json").string());
    out << to_json().dump(2) << '\n';
  }

  RawTable summary;
  summary.columns = {"method", "metric", "mean", "sd", "n"};
  for (const auto& r : rows) {
    summary.cells.push_back({r.method, "seconds", num(r.seconds.mean), num(r.seconds.sd), std::to_string(r.seconds.n)});
    summary.cells.push_back({r.method, "validity", num(r.validity), "", std::to_string(r.attempted)});
    const std::pair<const char*, const std::optional<MeanSd>*> optional_stats[] = {
        {"proximity", &r.proximity}, {"sparsity", &r.sparsity}, {"reconstruction", &r.reconstruction}};
    for (const auto& [name, stat] : optional_stats) {
      if (*stat) {
        summary.cells.push_back({r.method, name, num((*stat)->mean), num((*stat)->sd), std::to_string((*stat)->n)});
      } else {
        summary.cells.push_back({r.method, name, "", "", "0"});
      }
    }
  }
  write_csv((dir / "report.csv").string(), summary);

  RawTable detail;
  detail.columns = {"method",        "query",     "accepted",      "error",        "query_prediction",
                    "target",        "ce_prediction", "seconds",   "path_length",  "proximity",
                    "sparsity",      "proximity_raw", "sparsity_raw", "reconstruction"};
  for (const auto& d : details) {
    detail.cells.push_back({d.method, std::to_string(d.query), d.accepted ? "1" : "0", d.error,
                            num(d.query_prediction), num(d.target), num(d.ce_prediction), num(d.seconds),
                            std::to_string(d.path_length), num(d.proximity), num(d.sparsity),
                            num(d.proximity_raw), num(d.sparsity_raw), num(d.reconstruction)});
  }
  write_csv((dir / "details.csv").string(), detail);
}

BenchmarkReport benchmark(std::span<const Method> methods, const Tensor& queries, const Predictor& f,
                          const ConditionalAutoencoder& manifold, const FeatureSchema& schema,
                          const BenchmarkConfig& config) {
  config.validate();
  if (methods.empty()) throw std::invalid_argument("benchmark: no methods registered");
  if (queries.rank() != 2 || queries.rows() == 0) throw std::invalid_argument("benchmark: empty query set");
  const std::size_t n =
      config.max_queries ? std::min(config.max_queries, queries.rows()) : queries.rows();

  BenchmarkReport report;
  report.config = config.to_json();
  for (const auto& m : methods) report.config["methods"].push_back(m.name);

  const std::vector<double> start_labels = f.predict(queries);
  for (const auto& method : methods) {
    std::vector<Attempt> attempts;
    attempts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Attempt a;
      a.query.assign(queries.row(i).begin(), queries.row(i).end());
      GenerateRequest request;
      request.query = a.query;
      request.target = std::min(1.0, std::clamp(start_labels[i], 0.0, 1.0) + config.delta);
      request.target = std::max(0.0, request.target);
      request.tolerance = config.tolerance;
      request.steps = config.steps;

      DetailRow d;
      d.method = method.name;
      d.query = i;
      d.target = request.target;
      try {
        a.result = method.run(request);
      } catch (const std::exception& e) {
        a.error = e.what();
      }
      if (a.result) {
        const auto& r = *a.result;
        d.accepted = r.accepted;
        d.query_prediction = r.query_prediction;
        d.ce_prediction = r.ce_prediction();
        d.seconds = r.seconds;
        d.path_length = r.path.size();
        d.proximity = proximity(a.query, r.ce);
        d.sparsity = sparsity(a.query, r.ce);
        std::tie(d.proximity_raw, d.sparsity_raw) =
            raw_distances(schema, decode_row(schema, a.query), decode_row(schema, r.ce));
        d.reconstruction = reconstruction_error(r.ce, manifold, f);
      } else {
        d.error = a.error;
      }
      report.details.push_back(std::move(d));
      attempts.push_back(std::move(a));
    }
    report.rows.push_back(metric_suite(method.name, attempts, manifold, f));
  }
  return report;
}

}  // namespace lrce
