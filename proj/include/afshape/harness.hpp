#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "afshape/io.hpp"
#include "afshape/scene.hpp"

namespace afs {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "afshape 0.1.0";

/// fig2, fig4, fig5, fig6, fig7, fig8, fig9, fig10, fig11, fig1R.
const std::vector<std::string>& experiment_ids();

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::string experiment;
  std::uint64_t seed = 2025;
  int trials = 1000;
  int threads = 0;  // 0: hardware concurrency; never affects results
  OfdmGrid grid;
  std::string constellation = "16QAM";
  io::json params = io::json::object();
};

/// Defaults for one experiment. Throws ConfigError for unknown ids.
ExperimentConfig default_config(const std::string& experiment);

/// Overlays a user document on the defaults of its experiment. The document
/// may omit "experiment" when `experiment` is given. Unknown keys (top-level
/// or under params), type errors and out-of-range values raise ConfigError
/// with the source line where one can be found.
ExperimentConfig config_from_json(const io::JsonDocument& doc, const std::string& experiment = "");

io::json to_json(const ExperimentConfig& cfg);

/// Applies "dotted.key=value" to a config document. The value is parsed as
/// JSON when possible and kept as a string otherwise.
void apply_override(io::json& config, const std::string& assignment);

/// SHA-1 (hex) of the canonical config JSON without the thread count.
std::string config_hash(const ExperimentConfig& cfg);

/// Git blob hash: SHA-1 of "blob <size>\0" followed by the content.
std::string git_blob_sha1(std::string_view content);

struct Table {
  std::string name;  // file name, e.g. "fig9_pd.csv"
  std::string csv;
};

struct ExperimentResult {
  std::vector<Table> tables;
  io::json summary = io::json::object();
};

/// Runs one experiment in memory. Output bytes depend only on the config
/// (seed included), never on the thread count.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct RunRecord {
  std::filesystem::path dir;
  io::json manifest;
};

/// Runs and writes tables, summary.json, config.json and manifest.json to
/// out_root/<experiment>/<first 12 hex of config hash>/.
RunRecord run_and_write(const ExperimentConfig& cfg, const std::filesystem::path& out_root);

}  // namespace afs
