#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "lrce/bundle.hpp"
#include "lrce/workflow.hpp"

namespace httplib {
class Server;
}

namespace lrce {

inline constexpr const char* kVersion = "0.1.0";

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// Read-only HTTP front end over one loaded bundle. Handlers are plain
/// member functions so they can be exercised without a socket; mount()
/// wires them to routes. Until load() has completed every endpoint answers
/// 503.
class Service {
 public:
  /// Installs the model snapshot. `table` (optional) backs /api/rows.
  void load(std::shared_ptr<const ModelBundle> bundle, std::optional<RawTable> table = std::nullopt);
  bool ready() const;

  ApiResponse health() const;
  ApiResponse schema() const;
  ApiResponse rows(const std::string& split, const std::string& limit) const;
  ApiResponse generate(const std::string& body) const;

  /// Registers the /api routes and, if given, a static directory at "/".
  void mount(httplib::Server& server, const std::optional<std::filesystem::path>& static_dir = std::nullopt) const;

 private:
  struct Snapshot {
    std::shared_ptr<const ModelBundle> bundle;
    std::map<std::string, Dataset> parts;  // "train", "test", "all"
  };

  std::shared_ptr<const Snapshot> snapshot() const;

  mutable std::mutex mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
};

}  // namespace lrce
