#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "afshape/designer.hpp"
#include "afshape/scene.hpp"
#include "afshape/waveform.hpp"

namespace afs::io {

using json = nlohmann::json;

/// Parsed JSON plus the text it came from, so schema errors can name a line.
struct JsonDocument {
  json root;
  std::string text;
  std::string origin = "<config>";

  /// 1-based line of the first occurrence of "key", or 0 when absent.
  int line_of(const std::string& key) const;
};

/// Parse errors become ConfigError carrying the parser's line and column.
JsonDocument parse_json(const std::string& text, const std::string& origin = "<config>");
JsonDocument load_json_file(const std::string& path);

/// Strict reader over one JSON object. Every accessor marks its key as
/// known; finish() rejects whatever was never asked for. Type mismatches and
/// unknown keys raise ConfigError naming the origin, line and dotted path.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path, std::shared_ptr<const JsonDocument> doc);

  bool has(const std::string& key) const;
  double number(const std::string& key, double fallback);
  double number(const std::string& key);
  /// Numbers, or null for +infinity.
  double number_or_inf(const std::string& key, double fallback);
  int integer(const std::string& key, int fallback);
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback);
  bool boolean(const std::string& key, bool fallback);
  std::string string(const std::string& key, const std::string& fallback);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);
  std::vector<int> integers(const std::string& key, const std::vector<int>& fallback);
  ObjectReader object(const std::string& key);
  /// The raw value, or nullptr when absent.
  const json* raw(const std::string& key);

  void finish() const;
  const std::string& path() const { return path_; }
  std::shared_ptr<const JsonDocument> document() const { return doc_; }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

 private:
  const json& object_;
  std::string path_;
  std::shared_ptr<const JsonDocument> doc_;
  std::set<std::string> known_;

  const json* fetch(const std::string& key);
};

json to_json(const PowerAllocation& alloc);
PowerAllocation allocation_from_json(ObjectReader reader);
PowerAllocation allocation_from_json(const json& j);

json to_json(const OfdmGrid& grid);
OfdmGrid grid_from_json(ObjectReader reader);

/// {"type": "flat" | "rayleigh", "snr_db": x, "seed": s} or
/// {"type": "custom", "gains_re": [...], "gains_im": [...], "noise_var": v}.
CommChannel channel_from_json(ObjectReader reader, int n);
json to_json(const CommChannel& ch);

/// Request keys: rho, eps_psl_db, eps_isl_db, constellation, grid, channel,
/// n0 ("search" or an integer), power_floor, solver{tolerance, max_iterations}.
DesignRequest design_request_from_json(const JsonDocument& doc);
json to_json(const DesignRequest& req);
json to_json(const DesignResult& result);

/// Scene as {"reflectors": [{"range_m", "snr_db", "kind", "phase_rad"}]}.
RadarScene scene_from_json(ObjectReader reader, const OfdmGrid& grid, double noise_var);

}  // namespace afs::io
