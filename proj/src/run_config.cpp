#include "lrce/run_config.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace lrce {

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train_fraction must be in (0,1)");
  if (!(trim_fraction >= 0.0 && trim_fraction < 1.0)) throw std::invalid_argument("trim_fraction must be in [0,1)");
}

nlohmann::json SplitSpec::to_json() const {
  return {{"train_fraction", train_fraction}, {"trim_fraction", trim_fraction}, {"seed", seed}};
}

SplitSpec SplitSpec::from_json(const nlohmann::json& j) {
  SplitSpec s;
  s.train_fraction = j.value("train_fraction", s.train_fraction);
  s.trim_fraction = j.value("trim_fraction", s.trim_fraction);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

nlohmann::json GenerateDefaults::to_json() const {
  return {{"tolerance", tolerance},
          {"steps", steps},
          {"accept_against_step_label", accept_against_step_label},
          {"last_passing", last_passing}};
}

GenerateDefaults GenerateDefaults::from_json(const nlohmann::json& j) {
  GenerateDefaults g;
  g.tolerance = j.value("tolerance", g.tolerance);
  g.steps = j.value("steps", g.steps);
  g.accept_against_step_label = j.value("accept_against_step_label", g.accept_against_step_label);
  g.last_passing = j.value("last_passing", g.last_passing);
  return g;
}

nlohmann::json RunConfig::to_json() const {
  return {{"seed", seed},
          {"port", port},
          {"split", split.to_json()},
          {"regressor", regressor.to_json()},
          {"train", train.to_json()},
          {"gdl", gdl.to_json()},
          {"gdl_descent", gdl_descent.to_json()},
          {"generate", generate.to_json()},
          {"benchmark", benchmark.to_json()}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  RunConfig c;
  const auto known = c.to_json();
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  try {
    c.seed = j.value("seed", c.seed);
    c.port = j.value("port", c.port);
    if (j.contains("split")) c.split = SplitSpec::from_json(j["split"]);
    if (j.contains("regressor")) c.regressor = RegressorConfig::from_json(j["regressor"]);
    if (j.contains("train")) c.train = TrainConfig::from_json(j["train"]);
    if (j.contains("gdl")) c.gdl = GdlTrainConfig::from_json(j["gdl"]);
    if (j.contains("gdl_descent")) c.gdl_descent = GdlSettings::from_json(j["gdl_descent"]);
    if (j.contains("generate")) c.generate = GenerateDefaults::from_json(j["generate"]);
    if (j.contains("benchmark")) {
      const auto& b = j["benchmark"];
      c.benchmark.delta = b.value("delta", c.benchmark.delta);
      c.benchmark.tolerance = b.value("tolerance", c.benchmark.tolerance);
      c.benchmark.steps = b.value("steps", c.benchmark.steps);
      c.benchmark.max_queries = b.value("max_queries", c.benchmark.max_queries);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void RunConfig::apply_env(const EnvLookup& lookup) {
  if (const char* s = lookup("LR_SEED")) seed = parse_seed(s, "LR_SEED");
  if (const char* p = lookup("LR_PORT")) port = parse_port(p, "LR_PORT");
}

void RunConfig::finalize() {
  split.seed = seed;
  regressor.seed = seed;
  train.seed = seed;
  gdl.seed = seed;
  split.validate();
  regressor.validate();
  train.validate();
  gdl.validate();
  gdl_descent.validate();
  benchmark.validate();
  if (!(generate.tolerance > 0.0) || generate.steps == 0) {
    throw std::invalid_argument("generate tolerance must be > 0 and steps >= 1");
  }
  if (port < 0 || port > 65535) throw std::invalid_argument("port out of range");
}

std::uint64_t parse_seed(const std::string& text, const std::string& source) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw std::invalid_argument(source + " must be a non-negative integer, got '" + text + "'");
  }
  return v;
}

int parse_port(const std::string& text, const std::string& source) {
  const auto v = parse_seed(text, source);
  if (v > 65535) throw std::invalid_argument(source + " must be in [0, 65535]");
  return static_cast<int>(v);
}

}  // namespace lrce
