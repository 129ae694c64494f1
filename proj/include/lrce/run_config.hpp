#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "lrce/benchmark.hpp"
#include "lrce/disentangle.hpp"
#include "lrce/gdl.hpp"
#include "lrce/regressor.hpp"

namespace lrce {

/// How raw rows become the train/test split: symmetric target trimming
/// first, then a seeded shuffle split.
struct SplitSpec {
  double train_fraction = 0.8;
  double trim_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SplitSpec from_json(const nlohmann::json& j);
};

struct GenerateDefaults {
  double tolerance = 0.05;
  std::size_t steps = 50;
  bool accept_against_step_label = false;
  bool last_passing = false;

  nlohmann::json to_json() const;
  static GenerateDefaults from_json(const nlohmann::json& j);
};

/// Settings for every subcommand. Precedence, lowest first: defaults, the
/// JSON config file, command-line flags, then LR_SEED / LR_PORT.
/// The top-level seed is copied into every component by finalize().
struct RunConfig {
  std::uint64_t seed = 0;
  int port = 8080;
  SplitSpec split;
  RegressorConfig regressor;
  TrainConfig train;
  GdlTrainConfig gdl;
  GdlSettings gdl_descent;
  GenerateDefaults generate;
  BenchmarkConfig benchmark;

  nlohmann::json to_json() const;
  /// Missing keys keep defaults; unknown top-level keys are rejected.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::filesystem::path& path);

  using EnvLookup = std::function<const char*(const char*)>;
  void apply_env(const EnvLookup& lookup);
  void finalize();
};

/// Strict unsigned / port parsing used for flags and environment values.
std::uint64_t parse_seed(const std::string& text, const std::string& source);
int parse_port(const std::string& text, const std::string& source);

}  // namespace lrce
