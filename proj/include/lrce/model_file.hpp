#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrce/hash.hpp"
#include "lrce/mlp.hpp"

namespace lrce {

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::string_view kModelFormatName = "lrce-model";

class ModelFormatError : public std::runtime_error {
 public:
  enum class Kind { kBadMagic, kVersion, kFingerprint, kTruncated, kCorrupt, kMissingSection, kIo };
  ModelFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ModelSection {
  std::string name;
  Mlp net;
};

/// In-memory image of a `.lrm` file: named networks plus a JSON metadata
/// block (schema, configs, training history). Layout is documented in
/// docs/model_format.md.
struct ModelParams {
  std::string schema_fingerprint;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<ModelSection> sections;

  bool has(std::string_view name) const;
  const Mlp& section(std::string_view name) const;
  /// Inserts or replaces a section, keeping first-insertion order.
  void put(std::string name, Mlp net);
};

void save_params(const ModelParams& params, const std::filesystem::path& path);

/// Reads a model file. If `expected_fingerprint` is given, a mismatch
/// raises ModelFormatError::Kind::kFingerprint.
ModelParams load_params(const std::filesystem::path& path,
                        const std::optional<std::string>& expected_fingerprint = std::nullopt);

std::vector<std::uint8_t> serialize_params(const ModelParams& params);
ModelParams deserialize_params(const std::vector<std::uint8_t>& bytes);

}  // namespace lrce
