#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace lrce {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two artifacts were built against different feature schemas.
class SchemaMismatch : public DataError {
 public:
  using DataError::DataError;
};

enum class FeatureKind { kContinuous, kCategorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  std::vector<std::string> categories;  // categorical only, in one-hot order
  double mean = 0.0;                    // continuous only, after fitting
  double stddev = 1.0;
};

/// Column range of one categorical feature inside an encoded row.
struct OneHotBlock {
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// A raw feature value: number for continuous features, category label for
/// categorical ones.
using RawValue = std::variant<double, std::string>;

struct RawRow {
  std::vector<RawValue> features;  // schema feature order
  std::optional<double> target;
};

/// Ordered feature descriptors plus normalization statistics. Continuous
/// features are z-scored with the population standard deviation; the target
/// is min-max scaled to [0,1].
struct FeatureSchema {
  std::vector<FeatureSpec> features;
  std::string target;
  bool fitted = false;
  double target_min = 0.0;
  double target_max = 1.0;

  void validate() const;
  std::size_t encoded_width() const;
  std::vector<OneHotBlock> one_hot_blocks() const;
  std::size_t feature_index(const std::string& name) const;

  double scale_target(double raw) const;
  double unscale_target(double scaled) const;

  /// Stable hash of names, kinds, categories and statistics.
  std::string fingerprint() const;

  nlohmann::json to_json() const;
  static FeatureSchema from_json(const nlohmann::json& j);
};

/// Rows read from a CSV file, still as text.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> cells;

  std::size_t column_index(const std::string& name) const;
  std::size_t size() const { return cells.size(); }
};

RawTable read_csv(const std::string& path);
RawTable parse_csv(const std::string& text);
void write_csv(const std::string& path, const RawTable& table);

/// Declares every non-target column continuous if all its cells parse as
/// numbers, categorical otherwise. No statistics are fitted.
FeatureSchema infer_schema(const RawTable& table, const std::string& target);

/// Parses table cells against the declared kinds. Categorical cells are kept
/// as text; unknown categories are only rejected at encode time.
std::vector<RawRow> parse_rows(const FeatureSchema& schema, const RawTable& table, bool require_target = true);

/// Computes normalization statistics on `rows` (the training split). Needs at
/// least two rows. Categorical features without a declared category list get
/// the sorted set of observed values.
FeatureSchema fit_schema(const FeatureSchema& declared, std::span<const RawRow> rows);

/// Drops the `fraction / 2` lowest and highest rows by raw target
/// (floor(n * fraction / 2) on each side). Returns the indices kept, in
/// original order.
std::vector<std::size_t> trim_extremes(std::span<const RawRow> rows, double fraction);

std::vector<double> encode_row(const FeatureSchema& schema, const RawRow& row);
RawRow decode_row(const FeatureSchema& schema, std::span<const double> encoded);

/// Replaces each one-hot block by a hard one-hot at its argmax.
void project_one_hot(const FeatureSchema& schema, std::span<double> encoded);

std::string format_raw(const RawValue& v);

}  // namespace lrce
