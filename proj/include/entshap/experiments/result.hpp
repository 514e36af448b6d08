#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "entshap/error.hpp"
#include "entshap/io.hpp"

namespace entshap {

// Uniform experiment envelope: the exact resolved config (minus execution-only
// knobs like thread count and output directory), a hash of that config, scalar
// metrics, per-cell records, and the artifact files written next to the result.
// Artifact names embed the config hash; repeated runs of the same config
// reproduce every byte.
struct ExperimentResult {
  std::string name;
  json config;
  std::uint64_t config_hash = 0;
  std::map<std::string, double> metrics;
  json records = json::array();
  std::vector<std::string> artifacts;  // file names relative to the output dir
  std::vector<std::string> warnings;

  void finalize_hash() { config_hash = hash_json(config); }

  std::string tag() const { return name + "_" + hex64(config_hash); }

  json to_json() const {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "experiment_result";
    j["name"] = name;
    j["config"] = config;
    j["config_hash"] = hex64(config_hash);
    j["metrics"] = metrics;
    j["records"] = records;
    j["artifacts"] = artifacts;
    j["warnings"] = warnings;
    return j;
  }
};

}  // namespace entshap
