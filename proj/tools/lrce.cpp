// Command-line front end: synthetic data, training, generation, benchmarking
// and the HTTP service.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lrce/service.hpp"
#include "lrce/synthetic.hpp"
#include "lrce/workflow.hpp"

namespace {

using namespace lrce;

struct ExitError {
  int code;
  std::string kind;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& kind, const std::string& message) {
  throw ExitError{code, kind, message};
}

// One-line machine-parsable failure record on stderr.
int report(const ExitError& e) {
  std::cerr << nlohmann::json{{"error", e.kind}, {"message", e.message}}.dump() << '\n';
  return e.code;
}

// Shared flags. Optional values stay empty unless given on the command line,
// so they only override the config file when present.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    app->add_option("--config", config, "JSON run configuration");
    app->add_option("--seed", seed, "master seed (overrides the config file)");
  }

  RunConfig resolve(const std::function<void(RunConfig&)>& flags = {}) const {
    RunConfig cfg = config.empty() ? RunConfig{} : RunConfig::from_file(config);
    if (seed) cfg.seed = *seed;
    if (flags) flags(cfg);
    cfg.apply_env([](const char* name) { return std::getenv(name); });
    cfg.finalize();
    return cfg;
  }
};

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) fail(3, "io", "cannot write " + path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(3, "io", "cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(2, "invalid", path + " is not valid JSON: " + e.what());
  }
}

void save_bundle(const ModelBundle& bundle, const std::string& out) {
  bundle.save(out);
  write_json(out + ".schema.json", bundle.schema.to_json());
  std::cerr << "wrote " << out << " and " << out << ".schema.json\n";
}

std::string sidecar_path(const std::string& out) {
  const std::filesystem::path p(out);
  return (p.parent_path() / (p.stem().string() + ".factors.csv")).string();
}

int run(int argc, char** argv) {
  CLI::App app{"Counterfactual explanations for regression models via label-disentangled autoencoders"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // synthetic
  auto* syn = app.add_subcommand("synthetic", "write the synthetic fixture with known factors");
  std::size_t syn_n = 0;
  std::uint64_t syn_seed = 0;
  double syn_noise = 0.05;
  std::string syn_out;
  syn->add_option("--n", syn_n, "rows")->required()->check(CLI::PositiveNumber);
  syn->add_option("--seed", syn_seed, "generator seed");
  syn->add_option("--noise", syn_noise, "feature noise level")->check(CLI::NonNegativeNumber);
  syn->add_option("--out", syn_out, "CSV path; factors go to <stem>.factors.csv")->required();

  // train-regressor
  auto* treg = app.add_subcommand("train-regressor", "train the regressor f to be explained");
  Common treg_common;
  treg_common.add(treg);
  std::string treg_data, treg_schema, treg_target, treg_out;
  std::optional<std::size_t> treg_epochs;
  treg->add_option("--data", treg_data, "training CSV")->required();
  treg->add_option("--schema", treg_schema, "schema JSON (inferred when omitted)");
  treg->add_option("--target", treg_target, "target column when inferring (default: last column)");
  treg->add_option("--epochs", treg_epochs, "training epochs");
  treg->add_option("--out", treg_out, "model file to write")->required();

  // train-ce
  auto* tce = app.add_subcommand("train-ce", "train the disentangled model and the GDL baseline");
  Common tce_common;
  tce_common.add(tce);
  std::string tce_data, tce_model, tce_out;
  std::optional<std::size_t> tce_epochs, tce_gdl_epochs;
  std::optional<double> tce_lambda_adv, tce_lambda_d;
  bool tce_no_gdl = false;
  tce->add_option("--data", tce_data, "the CSV the regressor was trained on")->required();
  tce->add_option("--model", tce_model, "model file holding the regressor")->required();
  tce->add_option("--out", tce_out, "model file to write (may equal --model)")->required();
  tce->add_option("--epochs", tce_epochs, "training epochs");
  tce->add_option("--lambda-adv", tce_lambda_adv, "adversarial weight");
  tce->add_option("--lambda-d", tce_lambda_d, "discriminator weight");
  tce->add_option("--gdl-epochs", tce_gdl_epochs, "epochs for the baseline autoencoder");
  tce->add_flag("--no-gdl", tce_no_gdl, "skip the GDL baseline");

  // generate
  auto* gen = app.add_subcommand("generate", "generate a counterfactual for one query");
  Common gen_common;
  gen_common.add(gen);
  std::string gen_model, gen_query, gen_out, gen_method = "ours";
  double gen_target = 0.0;
  std::optional<double> gen_tol;
  std::optional<std::size_t> gen_steps;
  bool gen_timing = false, gen_step_label = false, gen_last = false;
  gen->add_option("--model", gen_model, "trained model file")->required();
  gen->add_option("--query", gen_query, "query JSON: {feature: value} or an encoded array")->required();
  gen->add_option("--target", gen_target, "target prediction in scaled units [0,1]")->required();
  gen->add_option("--tol", gen_tol, "acceptance tolerance");
  gen->add_option("--steps", gen_steps, "interpolation steps");
  gen->add_option("--method", gen_method, "ours or gdl");
  gen->add_option("--out", gen_out, "result JSON (stdout when omitted)");
  gen->add_flag("--timing", gen_timing, "include wall-clock time in the result");
  gen->add_flag("--step-label", gen_step_label, "accept against the per-step label");
  gen->add_flag("--last-passing", gen_last, "return the last passing step");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "compare ours against GDL on a query set");
  Common bench_common;
  bench_common.add(bench);
  std::string bench_model, bench_data, bench_out, bench_split = "all";
  std::optional<double> bench_delta, bench_tol;
  std::optional<std::size_t> bench_steps, bench_max;
  bench->add_option("--model", bench_model, "trained model file")->required();
  bench->add_option("--data", bench_data, "query CSV")->required();
  bench->add_option("--split", bench_split, "rows of --data to use: all, train or test (replays the stored split)");
  bench->add_option("--delta", bench_delta, "target offset from the query prediction");
  bench->add_option("--tol", bench_tol, "acceptance tolerance");
  bench->add_option("--steps", bench_steps, "interpolation steps");
  bench->add_option("--max-queries", bench_max, "use at most this many rows");
  bench->add_option("--out", bench_out, "report directory")->required();

  // serve
  auto* srv = app.add_subcommand("serve", "serve the HTTP API over a trained model");
  Common srv_common;
  srv_common.add(srv);
  std::string srv_model, srv_data, srv_static, srv_host = "127.0.0.1";
  std::optional<int> srv_port;
  srv->add_option("--model", srv_model, "trained model file")->required();
  srv->add_option("--port", srv_port, "listen port (0 picks a free one)");
  srv->add_option("--host", srv_host, "listen address");
  srv->add_option("--data", srv_data, "CSV backing /api/rows");
  srv->add_option("--static", srv_static, "directory served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail(2, "usage", e.what());
  }

  if (syn->parsed()) {
    const auto data = make_synthetic(syn_n, syn_seed, syn_noise);
    write_csv(syn_out, data.to_table());
    write_csv(sidecar_path(syn_out), data.factors_table());
    std::cerr << "wrote " << syn_out << " and " << sidecar_path(syn_out) << '\n';
    return 0;
  }

  if (treg->parsed()) {
    const auto cfg = treg_common.resolve([&](RunConfig& c) {
      if (treg_epochs) c.regressor.epochs = *treg_epochs;
    });
    const auto table = read_csv(treg_data);
    const auto declared = declared_schema(
        table, treg_schema.empty() ? std::nullopt : std::optional<std::filesystem::path>(treg_schema), treg_target);
    const auto bundle = train_regressor_bundle(table, declared, cfg, &std::cerr);
    save_bundle(bundle, treg_out);
    return 0;
  }

  if (tce->parsed()) {
    const auto cfg = tce_common.resolve([&](RunConfig& c) {
      if (tce_epochs) c.train.epochs = *tce_epochs;
      if (tce_lambda_adv) c.train.lambda_adv = *tce_lambda_adv;
      if (tce_lambda_d) c.train.lambda_d = *tce_lambda_d;
      if (tce_gdl_epochs) c.gdl.epochs = *tce_gdl_epochs;
    });
    auto bundle = ModelBundle::load(tce_model);
    const auto table = read_csv(tce_data);
    train_ce_bundle(bundle, table, cfg, !tce_no_gdl, &std::cerr);
    save_bundle(bundle, tce_out);
    return 0;
  }

  if (gen->parsed()) {
    const auto cfg = gen_common.resolve([&](RunConfig& c) {
      if (gen_tol) c.generate.tolerance = *gen_tol;
      if (gen_steps) c.generate.steps = *gen_steps;
      if (gen_step_label) c.generate.accept_against_step_label = true;
      if (gen_last) c.generate.last_passing = true;
    });
    if (!(gen_target >= 0.0 && gen_target <= 1.0)) {
      fail(2, "invalid", "--target must be in [0,1] (scaled label units), got " + std::to_string(gen_target));
    }
    const auto bundle = ModelBundle::load(gen_model);
    GenerateRequest req;
    req.query = encode_query(bundle.schema, read_json(gen_query));
    req.target = gen_target;
    req.tolerance = cfg.generate.tolerance;
    req.steps = cfg.generate.steps;
    req.accept_against_step_label = cfg.generate.accept_against_step_label;
    req.last_passing = cfg.generate.last_passing;
    const auto result = run_method(bundle, gen_method, req);
    auto j = ce_to_json(result, bundle.schema, gen_timing);
    j["method"] = gen_method;
    j["model_fingerprint"] = bundle.schema.fingerprint();
    j["run_config"] = cfg.to_json();
    if (gen_out.empty()) {
      std::cout << j.dump(2) << '\n';
    } else {
      write_json(gen_out, j);
    }
    return 0;
  }

  if (bench->parsed()) {
    const auto cfg = bench_common.resolve([&](RunConfig& c) {
      if (bench_delta) c.benchmark.delta = *bench_delta;
      if (bench_tol) c.benchmark.tolerance = *bench_tol;
      if (bench_steps) c.benchmark.steps = *bench_steps;
      if (bench_max) c.benchmark.max_queries = *bench_max;
    });
    const auto bundle = ModelBundle::load(bench_model);
    const auto table = read_csv(bench_data);
    const auto queries = bundle_rows(bundle, table, parse_split_part(bench_split));
    auto report = run_benchmark(bundle, queries, cfg.benchmark);
    report.config["run_config"] = cfg.to_json();
    report.config["split"] = bench_split;
    report.write(bench_out);
    for (const auto& r : report.rows) {
      std::cerr << r.method << ": validity " << r.validity << ", mean time " << r.seconds.mean << " s\n";
    }
    return 0;
  }

  if (srv->parsed()) {
    const auto cfg = srv_common.resolve([&](RunConfig& c) {
      if (srv_port) c.port = *srv_port;
    });
    httplib::Server server;
    Service service;
    service.mount(server, srv_static.empty() ? std::nullopt : std::optional<std::filesystem::path>(srv_static));
    int port = cfg.port;
    if (port == 0) {
      port = server.bind_to_any_port(srv_host);
    } else if (!server.bind_to_port(srv_host, port)) {
      fail(3, "io", "cannot bind " + srv_host + ":" + std::to_string(port));
    }
    if (port < 0) fail(3, "io", "cannot bind " + srv_host);
    std::thread listener([&] { server.listen_after_bind(); });
    std::cerr << "listening on " << srv_host << ":" << port << '\n' << std::flush;
    try {
      auto bundle = std::make_shared<const ModelBundle>(ModelBundle::load(srv_model));
      std::optional<RawTable> table;
      if (!srv_data.empty()) table = read_csv(srv_data);
      service.load(bundle, std::move(table));
    } catch (...) {
      server.stop();
      listener.join();
      throw;
    }
    std::cerr << "ready\n" << std::flush;
    listener.join();
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ExitError& e) {
    return report(e);
  } catch (const ModelFormatError& e) {
    return report({4, "model_format", e.what()});
  } catch (const SchemaMismatch& e) {
    return report({3, "schema_mismatch", e.what()});
  } catch (const QueryError& e) {
    return report({3, e.kind() == QueryError::Kind::kSchema ? "query_schema" : "query_unencodable", e.what()});
  } catch (const DataError& e) {
    return report({3, "data", e.what()});
  } catch (const VicinityExhausted& e) {
    return report({5, "vicinity_exhausted", e.what()});
  } catch (const TrainingDiverged& e) {
    return report({5, "diverged", e.what()});
  } catch (const std::invalid_argument& e) {
    return report({2, "invalid", e.what()});
  } catch (const std::exception& e) {
    return report({1, "internal", e.what()});
  }
}
