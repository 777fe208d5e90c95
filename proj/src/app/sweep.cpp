#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "commands.hpp"

namespace ejc::app {

namespace {

constexpr std::size_t kMaxPoints = 100000;
const char* const kManifestName = "sweep.manifest";

struct Axis {
  std::string path;
  std::vector<double> values;
  bool integer = false;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<Axis> parse_axes(Section& s) {
  const Json& list = s.raw("axes");
  if (!list.is_array() || list.empty()) throw ConfigError("'sweep.axes' must be a non-empty array");
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "sweep.axes." + std::to_string(i);
    Section a(list[i], where);
    Axis ax;
    ax.path = a.string("path", "");
    if (ax.path.empty()) throw ConfigError("'" + where + ".path' is required");
    if (ax.path.rfind("sweep", 0) == 0) throw ConfigError("'" + where + ".path' may not point into the sweep section");
    ax.integer = a.boolean("integer", false);
    if (a.has("values")) {
      const Json& v = a.raw("values");
      if (!v.is_array() || v.empty()) throw ConfigError("'" + where + ".values' must be a non-empty array");
      for (std::size_t k = 0; k < v.size(); ++k) ax.values.push_back(as_number(v[k], where + ".values"));
      for (const char* key : {"start", "stop", "num", "scale"})
        if (a.has(key)) throw ConfigError("'" + where + "': give either values or start/stop/num");
      a.explicit_null("start");
      a.explicit_null("stop");
      a.explicit_null("num");
      a.explicit_null("scale");
    } else {
      a.explicit_null("values");
      const double start = a.number("start"), stop = a.number("stop");
      const auto num = a.count("num", 0);
      const std::string scale = a.string("scale", "linear");
      if (num < 1) throw ConfigError("'" + where + ".num' must be at least 1");
      if (num > kMaxPoints) throw ConfigError("'" + where + ".num' exceeds the sweep point limit");
      if (scale != "linear" && scale != "log") throw ConfigError("'" + where + ".scale' must be linear or log");
      if (scale == "log" && !(start > 0.0 && stop > 0.0))
        throw ConfigError("'" + where + "': log scale needs positive start and stop");
      for (std::uint64_t k = 0; k < num; ++k) {
        const double f = num == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(num - 1);
        ax.values.push_back(scale == "log" ? start * std::pow(stop / start, f) : start + (stop - start) * f);
      }
    }
    if (ax.integer)
      for (auto& v : ax.values) v = std::round(v);
    a.finish();
    axes.push_back(std::move(ax));
  }
  return axes;
}

std::string cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

const Json* lookup(const Json& root, const std::string& dotted) {
  const Json* node = &root;
  std::size_t pos = 0;
  while (pos <= dotted.size()) {
    const auto next = dotted.find('.', pos);
    const std::string part = dotted.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    if (node->is_object()) {
      if (!node->contains(part)) return nullptr;
      node = &node->at(part);
    } else if (node->is_array()) {
      if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) return nullptr;
      const auto idx = std::stoul(part);
      if (idx >= node->size()) return nullptr;
      node = &(*node)[idx];
    } else {
      return nullptr;
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return node;
}

std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  return s;
}

// Row text without the trailing CRLF.
std::string join_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += CsvWriter::quote(cells[i]);
  }
  return out;
}

}  // namespace

OutputBundle cmd_sweep(const RunConfig& cfg, const SweepOptions& options) {
  static const Json empty = Json::object();
  const Json& section = cfg.root.contains("sweep") && !cfg.root.at("sweep").is_null() ? cfg.root.at("sweep") : empty;
  Section s(section, "sweep");
  const std::string command = s.string("command", "");
  using Runner = Json (*)(const RunConfig&);
  static const std::map<std::string, Runner> runners{
      {"estimate", &estimate_report},
      {"regime", &regime_report},
      {"spectrum", [](const RunConfig& c) { return spectrum_report(c, nullptr); }},
      {"gate", &gate_report}};
  const auto runner = runners.find(command);
  if (runner == runners.end()) throw ConfigError("'sweep.command' must be estimate, regime, spectrum or gate");
  const std::vector<Axis> axes = parse_axes(s);
  std::vector<std::string> outputs;
  {
    const Json& list = s.raw("outputs");
    if (!list.is_array() || list.empty()) throw ConfigError("'sweep.outputs' must be a non-empty array of names");
    for (const auto& o : list) {
      if (!o.is_string() || o.get<std::string>().empty())
        throw ConfigError("'sweep.outputs' must be a non-empty array of names");
      outputs.push_back(o.get<std::string>());
    }
  }
  s.finish();

  std::size_t total = 1;
  for (const auto& a : axes) {
    if (a.values.size() > kMaxPoints / total) throw ConfigError("sweep grid exceeds 100000 points");
    total *= a.values.size();
  }

  std::vector<std::string> header{"index"};
  for (const auto& a : axes) header.push_back(a.path);
  header.insert(header.end(), outputs.begin(), outputs.end());
  header.push_back("error");

  auto point_row = [&](std::size_t index) {
    std::vector<std::string> cells{std::to_string(index)};
    Json root = cfg.root;
    std::size_t rem = index;
    std::vector<double> coords(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      coords[a] = axes[a].values[rem % axes[a].values.size()];
      rem /= axes[a].values.size();
    }
    for (std::size_t a = 0; a < axes.size(); ++a)
      cells.push_back(axes[a].integer ? std::to_string(static_cast<long long>(coords[a])) : format_double(coords[a]));
    std::vector<std::string> values(outputs.size());
    std::string error;
    try {
      for (std::size_t a = 0; a < axes.size(); ++a)
        set_path(root, axes[a].path,
                 axes[a].integer ? Json(static_cast<long long>(coords[a])) : Json(coords[a]));
      const RunConfig point = parse_run_config(root);
      const Json report = runner->second(point);
      for (std::size_t o = 0; o < outputs.size(); ++o)
        if (const Json* v = lookup(report, outputs[o])) values[o] = cell(*v);
    } catch (const std::exception& e) {
      error = "exit " + std::to_string(exit_code_for(e)) + ": " + one_line(e.what());
    }
    cells.insert(cells.end(), values.begin(), values.end());
    cells.push_back(error);
    return join_row(cells);
  };

  // Resume from the manifest of an earlier run of the same configuration.
  const std::string signature = "embedded-jc sweep manifest " + std::to_string(fnv1a(cfg.root.dump()));
  const auto manifest_path = options.out_dir / kManifestName;
  std::vector<std::optional<std::string>> rows(total);
  if (std::filesystem::exists(manifest_path)) {
    std::ifstream in(manifest_path, std::ios::binary);
    std::string line;
    std::getline(in, line);
    if (line != signature)
      throw ConfigError("'" + manifest_path.string() + "' belongs to a different sweep configuration; remove it to start over");
    while (std::getline(in, line)) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) continue;  // torn final line of an interrupted run
      const auto idx = std::stoull(line.substr(0, tab));
      if (idx < total) rows[idx] = line.substr(tab + 1);
    }
  }
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < total; ++i)
    if (!rows[i]) pending.push_back(i);

  std::filesystem::create_directories(options.out_dir);
  if (!std::filesystem::exists(manifest_path)) write_file_atomic(manifest_path, signature + "\n");
  std::ofstream manifest(manifest_path, std::ios::binary | std::ios::app);
  if (!manifest) throw Error("cannot append to '" + manifest_path.string() + "'");

  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::size_t done_now = 0;
  auto worker = [&] {
    while (!stop) {
      const std::size_t k = next++;
      if (k >= pending.size()) return;
      std::string row = point_row(pending[k]);
      std::lock_guard lock(mutex);
      manifest << pending[k] << '\t' << row << '\n' << std::flush;
      rows[pending[k]] = std::move(row);
      ++done_now;
      if (options.stop_after && done_now >= *options.stop_after) stop = true;
    }
  };
  std::vector<std::thread> threads;
  const std::size_t n_workers = worker_count(pending.size());
  for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  OutputBundle b;
  const bool complete = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.has_value(); });
  if (!complete) {
    b.console = "stopped after " + std::to_string(done_now) + " new points; rerun to resume\n";
    return b;
  }
  CsvWriter csv(header);
  std::string text = csv.str();
  std::size_t failed = 0;
  for (const auto& r : rows) {
    text += *r + "\r\n";
    if (r->back() != ',') ++failed;
  }
  b.files["sweep.csv"] = text;
  Json meta{{"command", "sweep"},
            {"version", version_string()},
            {"sweep_command", command},
            {"points", total},
            {"failed_points", failed},
            {"outputs", outputs}};
  meta["axes"] = Json::array();
  for (const auto& a : axes) meta["axes"].push_back({{"path", a.path}, {"values", a.values}, {"integer", a.integer}});
  meta["config"] = cfg.root;
  b.files["sweep.json"] = meta.dump(2) + "\n";
  b.console = std::to_string(total) + " points, " + std::to_string(failed) + " failed\n";
  return b;
}

}  // namespace ejc::app
