#include "config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ejc::app {

namespace {

const std::set<std::string> kCommandSections{"estimate", "spectrum", "dynamics", "gate", "sweep"};

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  for (const auto& p : parts)
    if (p.empty()) throw ConfigError("empty component in path '" + path + "'");
  return parts;
}

bool is_index(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

}  // namespace

Json load_config(const std::string& path, const std::vector<std::string>& sets) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json root;
  try {
    root = Json::parse(in, nullptr, true, false);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  for (const auto& s : sets) apply_override(root, s);
  return root;
}

void set_path(Json& root, const std::string& path, const Json& value) {
  Json* node = &root;
  const auto parts = split_path(path);
  for (const auto& part : parts) {
    if (node->is_array()) {
      if (!is_index(part)) throw ConfigError("'" + part + "' is not an array index in '" + path + "'");
      const auto idx = std::stoul(part);
      if (idx >= node->size()) throw ConfigError("index " + part + " out of range in '" + path + "'");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = Json::object();
      if (!node->is_object()) throw ConfigError("'" + path + "' descends into a non-object value");
      node = &(*node)[part];
    }
  }
  *node = value;
}

void apply_override(Json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  try {
    set_path(root, assignment.substr(0, eq), value);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("--set: ") + e.what());
  }
}

Section::Section(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
  if (!node_.is_object()) throw ConfigError("'" + path_ + "' must be a JSON object");
}

bool Section::has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }

bool Section::explicit_null(const std::string& key) {
  seen_.insert(key);
  return node_.contains(key) && node_.at(key).is_null();
}

const Json& Section::raw(const std::string& key) {
  seen_.insert(key);
  if (!node_.contains(key)) throw ConfigError("missing required key '" + path_ + "." + key + "'");
  return node_.at(key);
}

double as_number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError("'" + where + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError("'" + where + "' must be finite");
  return x;
}

std::uint64_t as_count(const Json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const double x = as_number(v, where);
  if (x < 0.0 || x != std::floor(x) || x >= 18446744073709551616.0)
    throw ConfigError("'" + where + "' must be a non-negative integer");
  return static_cast<std::uint64_t>(x);
}

double Section::number(const std::string& key) { return as_number(raw(key), path_ + "." + key); }

double Section::number(const std::string& key, double fallback) {
  seen_.insert(key);
  return has(key) ? as_number(node_.at(key), path_ + "." + key) : fallback;
}

std::optional<double> Section::optional_number(const std::string& key) {
  seen_.insert(key);
  if (!has(key)) return std::nullopt;
  return as_number(node_.at(key), path_ + "." + key);
}

std::int64_t Section::integer(const std::string& key, std::int64_t fallback) {
  seen_.insert(key);
  if (!has(key)) return fallback;
  const double x = as_number(node_.at(key), path_ + "." + key);
  if (x != std::floor(x) || std::abs(x) > 9.0e15) throw ConfigError("'" + path_ + "." + key + "' must be an integer");
  return static_cast<std::int64_t>(x);
}

std::uint64_t Section::count(const std::string& key, std::uint64_t fallback) {
  seen_.insert(key);
  return has(key) ? as_count(node_.at(key), path_ + "." + key) : fallback;
}

bool Section::boolean(const std::string& key, bool fallback) {
  seen_.insert(key);
  if (!has(key)) return fallback;
  if (!node_.at(key).is_boolean()) throw ConfigError("'" + path_ + "." + key + "' must be true or false");
  return node_.at(key).get<bool>();
}

std::string Section::string(const std::string& key, const std::string& fallback) {
  seen_.insert(key);
  if (!has(key)) return fallback;
  if (!node_.at(key).is_string()) throw ConfigError("'" + path_ + "." + key + "' must be a string");
  return node_.at(key).get<std::string>();
}

Section Section::child(const std::string& key) {
  seen_.insert(key);
  static const Json empty = Json::object();
  if (!has(key)) return Section(empty, path_ + "." + key);
  return Section(node_.at(key), path_ + "." + key);
}

void Section::finish() const {
  for (const auto& [key, _] : node_.items())
    if (!seen_.count(key)) throw ConfigError("unknown key '" + path_ + "." + key + "'");
}

SystemParams parse_params(Section s) {
  SystemParams p;
  p.g_c = s.number("g_c", p.g_c);
  p.g_m = s.number("g_m", p.g_m);
  p.delta = s.number("delta", p.delta);
  p.omega_c = s.optional_number("omega_c");
  p.kappa_c = s.number("kappa_c", p.kappa_c);
  p.gamma_jj = s.number("gamma_jj", p.gamma_jj);
  p.gamma_spin = s.number("gamma_spin", p.gamma_spin);
  try {
    p.spin_model = spin_model_from_string(s.string("spin_model", to_string(p.spin_model)));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (s.has("ensembles")) {
    const Json& list = s.raw("ensembles");
    if (!list.is_array() || list.empty()) throw ConfigError("'" + s.path() + ".ensembles' must be a non-empty array");
    p.ensembles.clear();
    for (std::size_t j = 0; j < list.size(); ++j) {
      Section e(list[j], s.path() + ".ensembles." + std::to_string(j));
      Ensemble en;
      en.n_spins = e.count("n_spins", 1);
      en.detuning = e.number("detuning", 0.0);
      en.g_m = e.optional_number("g_m");
      e.finish();
      p.ensembles.push_back(en);
    }
  } else {
    s.child("ensembles");
  }
  s.finish();
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("params: ") + e.what());
  }
  return p;
}

SpaceTruncation parse_truncation(Section s, std::size_t* max_dimension) {
  SpaceTruncation t;
  t.n_max = static_cast<int>(s.integer("n_max", t.n_max));
  t.k_max = static_cast<int>(s.integer("k_max", t.k_max));
  // Absent keeps the default; an explicit null removes the cap.
  if (s.has("total_excitation_max"))
    t.total_excitation_max = static_cast<int>(s.integer("total_excitation_max", 0));
  else if (s.explicit_null("total_excitation_max"))
    t.total_excitation_max.reset();
  const auto cap = s.count("max_dimension", kDefaultMaxDimension);
  if (max_dimension) *max_dimension = static_cast<std::size_t>(cap);
  s.finish();
  try {
    t.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return t;
}

GateEndpoint parse_endpoint(const std::string& text) {
  if (text == "transmon") return GateEndpoint::bus();
  const std::string prefix = "ensemble:";
  if (text.rfind(prefix, 0) == 0 && is_index(text.substr(prefix.size())))
    return GateEndpoint::spins(std::stoul(text.substr(prefix.size())));
  throw ConfigError("endpoint must be 'transmon' or 'ensemble:<index>', got '" + text + "'");
}

RunConfig parse_run_config(const Json& root) {
  RunConfig cfg;
  cfg.root = root;
  Section top(root, "config");
  const std::string mode = top.string("mode", "dimensionless");
  if (mode == "dimensionless") cfg.mode = UnitMode::dimensionless;
  else if (mode == "SI") cfg.mode = UnitMode::si;
  else throw ConfigError("config.mode must be 'dimensionless' or 'SI'");
  cfg.seed = top.count("seed", 0);
  cfg.params = parse_params(top.child("params"));
  cfg.truncation = parse_truncation(top.child("truncation"), &cfg.max_dimension);
  if (top.has("output_dir")) cfg.output_dir = top.string("output_dir", "");
  else top.string("output_dir", "");
  for (const auto& name : kCommandSections) {
    if (top.has(name) && !root.at(name).is_object()) throw ConfigError("'config." + name + "' must be an object");
    top.child(name);
  }
  top.finish();
  return cfg;
}

Json params_to_json(const SystemParams& p) {
  Json j;
  j["g_c"] = p.g_c;
  j["g_m"] = p.g_m;
  j["delta"] = p.delta;
  j["omega_c"] = p.omega_c ? Json(*p.omega_c) : Json(nullptr);
  j["kappa_c"] = p.kappa_c;
  j["gamma_jj"] = p.gamma_jj;
  j["gamma_spin"] = p.gamma_spin;
  j["spin_model"] = to_string(p.spin_model);
  j["ensembles"] = Json::array();
  for (const auto& e : p.ensembles) {
    Json je{{"n_spins", e.n_spins}, {"detuning", e.detuning}};
    if (e.g_m) je["g_m"] = *e.g_m;
    j["ensembles"].push_back(je);
  }
  return j;
}

Json truncation_to_json(const SpaceTruncation& t) {
  Json j{{"n_max", t.n_max}, {"k_max", t.k_max}};
  j["total_excitation_max"] = t.total_excitation_max ? Json(*t.total_excitation_max) : Json(nullptr);
  return j;
}

}  // namespace ejc::app
