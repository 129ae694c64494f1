#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lrce/schema.hpp"
#include "lrce/tensor.hpp"

namespace lrce {

/// Read-only prediction interface. The explained regressor is only ever
/// reached through this, so nothing downstream can modify it.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::vector<double> predict(const Tensor& x) const = 0;
  virtual std::size_t input_width() const = 0;
  virtual const std::string& schema_fingerprint() const = 0;
};

/// Encoded tabular data. `y` holds min-max scaled targets; `y_hat` holds the
/// regressor's predictions once the dataset has been relabeled (D_t).
struct Dataset {
  Tensor x;
  std::vector<double> y;
  std::optional<std::vector<double>> y_hat;
  std::vector<RawRow> raw;
  std::string schema_fingerprint;

  std::size_t size() const { return y.size(); }
  std::size_t width() const { return x.cols(); }
  /// ŷ if relabeled, otherwise y.
  const std::vector<double>& labels() const { return y_hat ? *y_hat : y; }
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// Encodes rows with a fitted schema. Targets are min-max scaled with the
/// schema's statistics and clamped into [0,1]; `clamped_targets` (if given)
/// receives how many needed clamping.
Dataset encode_dataset(const FeatureSchema& schema, std::span<const RawRow> rows,
                       std::size_t* clamped_targets = nullptr);

/// D_t: ŷ_i = f(x_i) clamped into [0,1]. The original y is kept.
Dataset relabel_with_model(const Dataset& data, const Predictor& f, std::size_t* clamped = nullptr);

/// Seeded shuffle, then the first round(n * fraction) indices go to train.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                            std::uint64_t seed);
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed);

}  // namespace lrce
