#include "lrce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lrce {

namespace {

void check_same(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("metric: rows of different width");
}

nlohmann::json stat_json(const std::optional<MeanSd>& s) {
  if (!s) return nullptr;
  return {{"mean", s->mean}, {"sd", s->sd}, {"n", s->n}};
}

}  // namespace

double proximity(std::span<const double> query, std::span<const double> ce) {
  check_same(query, ce);
  double s = 0.0;
  for (std::size_t i = 0; i < query.size(); ++i) s += (ce[i] - query[i]) * (ce[i] - query[i]);
  return std::sqrt(s);
}

double sparsity(std::span<const double> query, std::span<const double> ce) {
  check_same(query, ce);
  double s = 0.0;
  for (std::size_t i = 0; i < query.size(); ++i) s += std::abs(ce[i] - query[i]);
  return s;
}

double reconstruction_error(std::span<const double> x, const ConditionalAutoencoder& model, const Predictor& f) {
  const Tensor row = Tensor::from_data({1, x.size()}, {x.begin(), x.end()});
  const double label[] = {std::clamp(f.predict(row).front(), 0.0, 1.0)};
  const Tensor back = model.decode(model.encode(row), label);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (back[i] - x[i]) * (back[i] - x[i]);
  return s / static_cast<double>(x.size());
}

nlohmann::json MetricRow::to_json() const {
  return {{"method", method},
          {"attempted", attempted},
          {"accepted", accepted},
          {"errors", errors},
          {"validity", validity},
          {"seconds", stat_json(seconds)},
          {"proximity", stat_json(proximity)},
          {"sparsity", stat_json(sparsity)},
          {"reconstruction", stat_json(reconstruction)}};
}

MetricRow metric_suite(const std::string& method, std::span<const Attempt> attempts,
                       const ConditionalAutoencoder& manifold, const Predictor& f) {
  if (attempts.empty()) throw std::invalid_argument("metric_suite: no attempts");
  MetricRow row;
  row.method = method;
  row.attempted = attempts.size();
  std::vector<double> times, prox, spars, recon;
  for (const auto& a : attempts) {
    if (!a.result) {
      ++row.errors;
      continue;
    }
    times.push_back(a.result->seconds);
    if (!a.result->accepted) continue;
    ++row.accepted;
    prox.push_back(proximity(a.query, a.result->ce));
    spars.push_back(sparsity(a.query, a.result->ce));
    recon.push_back(reconstruction_error(a.result->ce, manifold, f));
  }
  row.validity = static_cast<double>(row.accepted) / static_cast<double>(row.attempted);
  row.seconds = mean_sd(times);
  if (row.accepted > 0) {
    row.proximity = mean_sd(prox);
    row.sparsity = mean_sd(spars);
    row.reconstruction = mean_sd(recon);
  }
  return row;
}

}  // namespace lrce
