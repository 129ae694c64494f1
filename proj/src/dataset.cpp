#include "lrce/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace lrce {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.x = x.select_rows(indices);
  out.schema_fingerprint = schema_fingerprint;
  out.y.reserve(indices.size());
  for (auto i : indices) out.y.push_back(y.at(i));
  if (y_hat) {
    out.y_hat.emplace();
    for (auto i : indices) out.y_hat->push_back(y_hat->at(i));
  }
  if (!raw.empty()) {
    for (auto i : indices) out.raw.push_back(raw.at(i));
  }
  return out;
}

Dataset encode_dataset(const FeatureSchema& schema, std::span<const RawRow> rows, std::size_t* clamped_targets) {
  if (rows.empty()) throw DataError("encode: no rows");
  const std::size_t width = schema.encoded_width();
  std::vector<double> data;
  data.reserve(rows.size() * width);
  Dataset ds;
  std::size_t clamped = 0;
  for (const auto& r : rows) {
    auto enc = encode_row(schema, r);
    data.insert(data.end(), enc.begin(), enc.end());
    if (!r.target) throw DataError("encode: row without target");
    double y = schema.scale_target(*r.target);
    if (y < 0.0 || y > 1.0) {
      ++clamped;
      y = std::clamp(y, 0.0, 1.0);
    }
    ds.y.push_back(y);
  }
  ds.x = Tensor::from_data({rows.size(), width}, std::move(data));
  ds.raw.assign(rows.begin(), rows.end());
  ds.schema_fingerprint = schema.fingerprint();
  if (clamped_targets) *clamped_targets = clamped;
  return ds;
}

Dataset relabel_with_model(const Dataset& data, const Predictor& f, std::size_t* clamped) {
  if (f.schema_fingerprint() != data.schema_fingerprint) {
    throw SchemaMismatch("relabel: schema fingerprint mismatch (regressor " + f.schema_fingerprint() + ", data " +
                    data.schema_fingerprint + ")");
  }
  Dataset out = data;
  auto pred = f.predict(data.x);
  std::size_t n = 0;
  for (double& v : pred) {
    if (v < 0.0 || v > 1.0) {
      ++n;
      v = std::clamp(v, 0.0, 1.0);
    }
  }
  out.y_hat = std::move(pred);
  if (clamped) *clamped = n;
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                            std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DataError("split fraction must be in (0,1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  if (n_train == 0 || n_train == n) {
    throw DataError("split of " + std::to_string(n) + " rows at fraction " + std::to_string(train_fraction) +
                    " leaves an empty side");
  }
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  auto [train, test] = split_indices(data.size(), train_fraction, seed);
  return {data.subset(train), data.subset(test)};
}

}  // namespace lrce
