#pragma once

// Layered run configuration (defaults < JSON config file < command-line
// flags) and oracle construction from it.
//
// Config file schema (every key optional):
//   {
//     "attack":  { "ga": {...}, "fitness": {...}, "perceptual": {...},
//                  "search_box": {"L.intensity": [lo, hi], ...},
//                  "components": "full", "eps_z": 1e-6 },
//     "oracle":  { "kind": "builtin" | "remote", ... },
//     "perceptual_endpoint": { "url": ..., "timeout_s": ..., "retries": ... },
//     "dataset": "path", "output": "path", "workers": 1
//   }
// A run manifest is accepted as a config file too: its "config" member is
// used.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wrinkle/error.hpp"
#include "wrinkle/ga.hpp"
#include "wrinkle/harness.hpp"
#include "wrinkle/oracle.hpp"
#include "wrinkle/remote.hpp"

namespace wrinkle {

struct OracleConfig {
  std::string kind = "builtin";        // builtin | remote
  std::string generator = "toy";       // toy | quadrant | weights
  std::uint64_t seed = 0;
  int classes = 4;
  double gain = 40.0;
  int input_height = 64;
  int input_width = 64;
  std::string weights_path;
  RemoteEndpoint remote;
  std::vector<std::string> labels;
};

struct RunConfig {
  AttackConfig attack;
  OracleConfig oracle;
  std::optional<RemoteEndpoint> perceptual_endpoint;
  std::string dataset;
  std::string output = "run";
  int workers = 1;
};

inline void to_json(nlohmann::json& j, const RemoteEndpoint& e) {
  j = nlohmann::json{{"url", e.url}, {"timeout_s", e.timeout_s}, {"retries", e.retries}};
}
inline void from_json(const nlohmann::json& j, RemoteEndpoint& e) {
  const RemoteEndpoint d;
  e.url = j.value("url", d.url);
  e.timeout_s = j.value("timeout_s", d.timeout_s);
  e.retries = j.value("retries", d.retries);
}

inline void to_json(nlohmann::json& j, const OracleConfig& o) {
  j = nlohmann::json{{"kind", o.kind},
                     {"generator", o.generator},
                     {"seed", o.seed},
                     {"classes", o.classes},
                     {"gain", o.gain},
                     {"input_height", o.input_height},
                     {"input_width", o.input_width},
                     {"weights_path", o.weights_path},
                     {"remote", o.remote},
                     {"labels", o.labels}};
}
inline void from_json(const nlohmann::json& j, OracleConfig& o) {
  const OracleConfig d;
  o.kind = j.value("kind", d.kind);
  o.generator = j.value("generator", d.generator);
  o.seed = j.value("seed", d.seed);
  o.classes = j.value("classes", d.classes);
  o.gain = j.value("gain", d.gain);
  o.input_height = j.value("input_height", d.input_height);
  o.input_width = j.value("input_width", d.input_width);
  o.weights_path = j.value("weights_path", d.weights_path);
  o.remote = j.value("remote", d.remote);
  o.labels = j.value("labels", d.labels);
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"attack", c.attack},   {"oracle", c.oracle},
                     {"dataset", c.dataset}, {"output", c.output},
                     {"workers", c.workers}};
  j["perceptual_endpoint"] =
      c.perceptual_endpoint ? nlohmann::json(*c.perceptual_endpoint) : nlohmann::json(nullptr);
}
inline void from_json(const nlohmann::json& j, RunConfig& c) {
  c = RunConfig{};
  if (j.contains("attack")) c.attack = j.at("attack").get<AttackConfig>();
  if (j.contains("oracle")) c.oracle = j.at("oracle").get<OracleConfig>();
  if (j.contains("perceptual_endpoint") && !j.at("perceptual_endpoint").is_null())
    c.perceptual_endpoint = j.at("perceptual_endpoint").get<RemoteEndpoint>();
  c.dataset = j.value("dataset", c.dataset);
  c.output = j.value("output", c.output);
  c.workers = j.value("workers", c.workers);
}

/// Reads a config file or a run manifest (whose "config" member is used).
inline RunConfig load_run_config(const std::filesystem::path& path) {
  nlohmann::json j = read_json_file(path);
  if (j.contains("config") && j.contains("version")) j = j.at("config");
  try {
    return j.get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("invalid config " + path.string() + ": " + e.what());
  }
}

inline std::unique_ptr<Oracle> make_oracle(const OracleConfig& o) {
  // Remote servers receive images at dataset resolution and resize
  // themselves; input_height / input_width apply to builtin oracles only.
  if (o.kind == "remote") return std::make_unique<RemoteOracle>(o.remote, o.labels);
  if (o.kind != "builtin") throw UsageError("unknown oracle kind '" + o.kind + "'");
  const InputSize size{o.input_height, o.input_width};
  if (o.generator == "toy")
    return std::make_unique<LinearOracle>(build_toy_oracle(o.seed, o.classes, size));
  if (o.generator == "quadrant")
    return std::make_unique<LinearOracle>(build_quadrant_oracle(o.gain, size));
  if (o.generator == "weights") {
    if (o.weights_path.empty()) throw UsageError("builtin weights oracle needs a weights file");
    return std::make_unique<LinearOracle>(load_linear_oracle(o.weights_path));
  }
  throw UsageError("unknown builtin oracle generator '" + o.generator + "'");
}

inline std::unique_ptr<PerceptualMetric> make_perceptual_metric(const RunConfig& c) {
  if (c.attack.perceptual.backend == PerceptualBackend::None) return nullptr;
  if (!c.perceptual_endpoint)
    throw UsageError("perceptual backend 'external' needs a perceptual endpoint");
  return std::make_unique<RemotePerceptual>(*c.perceptual_endpoint);
}

}  // namespace wrinkle
