#pragma once

// Strict JSON run configuration: dotted-path overrides, unknown-key
// rejection and conversion into library parameter records.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ejc/errors.hpp"
#include "ejc/gates.hpp"
#include "ejc/hilbert.hpp"
#include "ejc/params.hpp"

namespace ejc::app {

using Json = nlohmann::json;

/// Usage or configuration problem (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class UnitMode { dimensionless, si };

/// Reads a JSON file and applies `key=value` overrides in order.
Json load_config(const std::string& path, const std::vector<std::string>& sets);

/// Sets a dotted path (object keys, array indices) to `value`.
void set_path(Json& root, const std::string& path, const Json& value);

/// Sets a dotted path ("params.ensembles.0.detuning") to a value parsed as JSON,
/// or as a string when it is not valid JSON. Missing objects are created.
void apply_override(Json& root, const std::string& assignment);

/// Key-checked view of one JSON object.
class Section {
 public:
  Section(const Json& node, std::string path);

  bool has(const std::string& key) const;
  /// Marks the key as read; true when it is present with a null value.
  bool explicit_null(const std::string& key);
  const Json& raw(const std::string& key);
  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  std::optional<double> optional_number(const std::string& key);
  std::int64_t integer(const std::string& key, std::int64_t fallback);
  std::uint64_t count(const std::string& key, std::uint64_t fallback);
  bool boolean(const std::string& key, bool fallback);
  std::string string(const std::string& key, const std::string& fallback);
  Section child(const std::string& key);
  const std::string& path() const { return path_; }
  /// Throws ConfigError naming any key that was never read.
  void finish() const;

 private:
  const Json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

double as_number(const Json& value, const std::string& where);
std::uint64_t as_count(const Json& value, const std::string& where);

struct RunConfig {
  UnitMode mode = UnitMode::dimensionless;
  std::uint64_t seed = 0;
  SystemParams params;
  SpaceTruncation truncation;
  std::size_t max_dimension = kDefaultMaxDimension;
  std::optional<std::string> output_dir;
  Json root;
};

/// Validates the top level and the shared sections. Command sections are
/// checked by the command that consumes them; sections for other commands
/// must still be objects.
RunConfig parse_run_config(const Json& root);

SystemParams parse_params(Section s);
SpaceTruncation parse_truncation(Section s, std::size_t* max_dimension);
GateEndpoint parse_endpoint(const std::string& text);

Json params_to_json(const SystemParams& p);
Json truncation_to_json(const SpaceTruncation& t);

}  // namespace ejc::app
