#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrce/benchmark.hpp"
#include "lrce/bundle.hpp"
#include "lrce/run_config.hpp"

namespace lrce {

// Glue shared by the command-line tool, the HTTP service and the Python
// module.

/// Schema from a JSON file if given, otherwise inferred from the table with
/// `target` (default: the last column) as the target.
FeatureSchema declared_schema(const RawTable& table, const std::optional<std::filesystem::path>& schema_file,
                              const std::string& target = "");

struct PreparedRows {
  std::vector<RawRow> rows;  // after trimming
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

PreparedRows prepare_rows(const FeatureSchema& declared, const RawTable& table, const SplitSpec& split);

enum class SplitPart { kTrain, kTest, kAll };
SplitPart parse_split_part(const std::string& name);

/// Trims, splits, fits the schema on the training part and trains f.
ModelBundle train_regressor_bundle(const RawTable& table, const FeatureSchema& declared, const RunConfig& config,
                                   std::ostream* log = nullptr);

/// Rebuilds the regressor's training split, relabels it with f and trains
/// the disentangled model (and the GDL baseline when `with_gdl`).
void train_ce_bundle(ModelBundle& bundle, const RawTable& table, const RunConfig& config, bool with_gdl,
                     std::ostream* log = nullptr);

/// Encodes one part of a table with the bundle's schema. kTrain / kTest
/// replay the split stored in the bundle; kAll takes every row untrimmed.
Dataset bundle_rows(const ModelBundle& bundle, const RawTable& table, SplitPart part);

/// A query the caller sent that does not fit the schema.
class QueryError : public DataError {
 public:
  enum class Kind { kSchema, kUnencodable };
  QueryError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Accepts either {"feature": value, ...} in raw units or an array holding
/// an encoded row. Wrong shape or JSON types are kSchema errors; values
/// that cannot be encoded (unknown category, invalid one-hot) are
/// kUnencodable.
std::vector<double> encode_query(const FeatureSchema& schema, const nlohmann::json& query);

/// "ours" or "gdl".
CEResult run_method(const ModelBundle& bundle, const std::string& method, const GenerateRequest& request);

BenchmarkReport run_benchmark(const ModelBundle& bundle, const Dataset& queries, const BenchmarkConfig& config);

}  // namespace lrce
