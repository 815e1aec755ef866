#include "dualrate/config.hpp"

#include "dualrate/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dualrate {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

[[noreturn]] void mismatch(const KeyValue& kv, const char* expected) {
  throw ConfigError(kv.key, std::string("expected ") + expected + ", got '" + kv.value + "' (" +
                                kv.origin + ")");
}

double to_double(const KeyValue& kv) {
  const auto& v = kv.value;
  if (v.empty()) mismatch(kv, "a number");
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (errno != 0 || end != v.c_str() + v.size()) mismatch(kv, "a number");
  return x;
}

template <typename Int>
Int to_int(const KeyValue& kv, const char* expected = "an integer") {
  Int x{};
  const auto* first = kv.value.data();
  const auto* last = first + kv.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last) mismatch(kv, expected);
  return x;
}

bool to_bool(const KeyValue& kv) {
  if (kv.value == "true" || kv.value == "1") return true;
  if (kv.value == "false" || kv.value == "0") return false;
  mismatch(kv, "true or false");
}

std::optional<double> to_optional(const KeyValue& kv) {
  if (kv.value == "none" || kv.value.empty()) return std::nullopt;
  return to_double(kv);
}

std::string num(double x) { return format_number(x); }
std::string opt(const std::optional<double>& x) { return x ? num(*x) : "none"; }

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::vector<Interval> to_windows(const KeyValue& kv) {
  std::vector<Interval> out;
  if (kv.value.empty() || kv.value == "default") return out;
  for (const auto& item : split(kv.value, ';')) {
    const auto bounds = split(item, ':');
    if (bounds.size() != 2) mismatch(kv, "windows as lo:hi;lo:hi");
    out.push_back({to_double({kv.key, bounds[0], kv.origin}), to_double({kv.key, bounds[1], kv.origin})});
  }
  return out;
}

std::string render_windows(const std::vector<Interval>& windows) {
  if (windows.empty()) return "default";
  std::vector<std::string> items;
  for (const auto& w : windows) items.push_back(num(w.lo) + ":" + num(w.hi));
  return join(items, ';');
}

struct Field {
  std::function<void(RunConfig&, const KeyValue&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<std::pair<std::string, Field>>& schema() {
  using C = RunConfig;
  using KV = KeyValue;
  static const std::vector<std::pair<std::string, Field>> fields{
      {"command", {[](C& c, const KV& kv) { c.command = kv.value; }, [](const C& c) { return c.command; }}},
      {"signal", {[](C& c, const KV& kv) { c.experiment.signal = kv.value; },
                  [](const C& c) { return c.experiment.signal; }}},
      {"signals", {[](C& c, const KV& kv) { c.signals = split(kv.value, ','); },
                   [](const C& c) { return join(c.signals, ','); }}},
      {"table", {[](C& c, const KV& kv) { c.table = kv.value; }, [](const C& c) { return c.table; }}},
      {"mode", {[](C& c, const KV& kv) { c.mode = kv.value; }, [](const C& c) { return c.mode; }}},
      {"rate", {[](C& c, const KV& kv) { c.rate = to_double(kv); }, [](const C& c) { return num(c.rate); }}},
      {"replication", {[](C& c, const KV& kv) { c.replication = to_int<std::uint32_t>(kv, "a non-negative integer"); },
                       [](const C& c) { return std::to_string(c.replication); }}},
      {"step", {[](C& c, const KV& kv) { c.step = to_double(kv); }, [](const C& c) { return num(c.step); }}},
      {"family", {[](C& c, const KV& kv) { c.family = kv.value; }, [](const C& c) { return c.family; }}},
      {"order", {[](C& c, const KV& kv) { c.experiment.order = to_int<int>(kv); },
                 [](const C& c) { return std::to_string(c.experiment.order); }}},
      {"depth", {[](C& c, const KV& kv) { c.experiment.table_depth = to_int<int>(kv); },
                 [](const C& c) { return std::to_string(c.experiment.table_depth); }}},
      {"xi", {[](C& c, const KV& kv) { c.experiment.rate.xi = to_double(kv); },
              [](const C& c) { return num(c.experiment.rate.xi); }}},
      {"ell", {[](C& c, const KV& kv) { c.experiment.rate.ell = to_int<int>(kv); },
               [](const C& c) { return std::to_string(c.experiment.rate.ell); }}},
      {"C", {[](C& c, const KV& kv) { c.experiment.rate.C = to_double(kv); },
             [](const C& c) { return num(c.experiment.rate.C); }}},
      {"p", {[](C& c, const KV& kv) { c.experiment.rate.p = to_double(kv); },
             [](const C& c) { return num(c.experiment.rate.p); }}},
      {"q1", {[](C& c, const KV& kv) { c.experiment.rate.q1 = to_int<int>(kv); },
              [](const C& c) { return std::to_string(c.experiment.rate.q1); }}},
      {"q2", {[](C& c, const KV& kv) { c.experiment.rate.q2 = to_int<int>(kv); },
              [](const C& c) { return std::to_string(c.experiment.rate.q2); }}},
      {"pi1", {[](C& c, const KV& kv) { c.experiment.rate.pi1 = to_double(kv); },
               [](const C& c) { return num(c.experiment.rate.pi1); }}},
      {"pi2", {[](C& c, const KV& kv) { c.experiment.rate.pi2 = to_double(kv); },
               [](const C& c) { return num(c.experiment.rate.pi2); }}},
      {"dwell_steps", {[](C& c, const KV& kv) { c.experiment.rate.dwell_steps = to_int<long>(kv); },
                       [](const C& c) { return std::to_string(c.experiment.rate.dwell_steps); }}},
      {"warmup_steps", {[](C& c, const KV& kv) { c.experiment.rate.warmup_steps = to_int<long>(kv); },
                        [](const C& c) { return std::to_string(c.experiment.rate.warmup_steps); }}},
      {"lookback_steps", {[](C& c, const KV& kv) { c.experiment.rate.lookback_steps = to_int<long>(kv); },
                          [](const C& c) { return std::to_string(c.experiment.rate.lookback_steps); }}},
      {"decision", {[](C& c, const KV& kv) {
                      try {
                        c.experiment.rate.decision = parse_decision_basis(kv.value);
                      } catch (const Error&) {
                        mismatch(kv, "settled, hold or zero");
                      }
                    },
                    [](const C& c) { return std::string(decision_basis_name(c.experiment.rate.decision)); }}},
      {"max_high_fraction", {[](C& c, const KV& kv) { c.experiment.rate.max_high_fraction = to_optional(kv); },
                             [](const C& c) { return opt(c.experiment.rate.max_high_fraction); }}},
      {"sigma", {[](C& c, const KV& kv) { c.experiment.noise.sigma = to_double(kv); },
                 [](const C& c) { return num(c.experiment.noise.sigma); }}},
      {"threshold_sigma", {[](C& c, const KV& kv) { c.experiment.threshold_sigma = to_optional(kv); },
                           [](const C& c) { return opt(c.experiment.threshold_sigma); }}},
      {"B", {[](C& c, const KV& kv) { c.experiment.replications = to_int<int>(kv); },
             [](const C& c) { return std::to_string(c.experiment.replications); }}},
      {"seed", {[](C& c, const KV& kv) { c.experiment.seed = to_int<std::uint64_t>(kv, "an unsigned 64-bit integer"); },
                [](const C& c) { return std::to_string(c.experiment.seed); }}},
      {"calibration_fraction", {[](C& c, const KV& kv) { c.experiment.calibration_fraction = to_double(kv); },
                                [](const C& c) { return num(c.experiment.calibration_fraction); }}},
      {"constant_depth", {[](C& c, const KV& kv) { c.experiment.constant_depth = to_int<int>(kv); },
                          [](const C& c) { return std::to_string(c.experiment.constant_depth); }}},
      {"exclude_calibration", {[](C& c, const KV& kv) { c.experiment.exclude_calibration = to_bool(kv); },
                               [](const C& c) { return std::string(c.experiment.exclude_calibration ? "true" : "false"); }}},
      {"interval_lo", {[](C& c, const KV& kv) { c.experiment.interval.lo = to_double(kv); },
                       [](const C& c) { return num(c.experiment.interval.lo); }}},
      {"interval_hi", {[](C& c, const KV& kv) { c.experiment.interval.hi = to_double(kv); },
                       [](const C& c) { return num(c.experiment.interval.hi); }}},
      {"windows", {[](C& c, const KV& kv) { c.experiment.windows = to_windows(kv); },
                   [](const C& c) { return render_windows(c.experiment.windows); }}},
  };
  return fields;
}

const Field* lookup(const std::string& key) {
  for (const auto& [name, field] : schema()) {
    if (name == key) return &field;
  }
  return nullptr;
}

bool is_known_signal(const std::string& name) {
  const auto& names = signal_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [name, field] : schema()) out.push_back(name);
    return out;
  }();
  return keys;
}

std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& origin) {
  std::vector<KeyValue> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(number);
    if (eq == std::string::npos) {
      throw ConfigError("<line>", "expected key=value at " + where);
    }
    out.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where});
  }
  return out;
}

void apply(RunConfig& cfg, const KeyValue& kv) {
  const Field* field = lookup(kv.key);
  if (!field) throw ConfigError(kv.key, "unknown key (" + kv.origin + ")");
  field->set(cfg, kv);
}

void RunConfig::validate() const {
  try {
    experiment.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    const std::string what = e.what();
    const auto colon = what.find(": ");
    if (colon != std::string::npos && lookup(what.substr(0, colon))) {
      throw ConfigError(what.substr(0, colon), what.substr(colon + 2));
    }
    throw ConfigError("<config>", what);
  }
  if (!is_known_signal(experiment.signal)) {
    throw ConfigError("signal", "unknown signal '" + experiment.signal + "'");
  }
  if (signals.empty()) throw ConfigError("signals", "must name at least one signal");
  for (const auto& s : signals) {
    if (!is_known_signal(s)) throw ConfigError("signals", "unknown signal '" + s + "'");
  }
  if (table != "mise") throw ConfigError("table", "only 'mise' is available, got '" + table + "'");
  if (mode != "dual" && mode != "constant") {
    throw ConfigError("mode", "expected dual or constant, got '" + mode + "'");
  }
  if (!(rate > 0.0)) throw ConfigError("rate", "must be positive");
  if (!(step > 0.0)) throw ConfigError("step", "must be positive");
  if (replication >= static_cast<std::uint32_t>(experiment.replications) && command == "run") {
    throw ConfigError("replication", "must be below B");
  }
  try {
    (void)parse_family(family);
  } catch (const Error& e) {
    throw ConfigError("family", e.what());
  }
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         const std::vector<KeyValue>& overrides) {
  RunConfig cfg;
  bool seeded = false;
  if (file) {
    std::ifstream in(*file, std::ios::binary);
    if (!in) throw Error(ErrorCategory::io, "cannot read config file " + file->string());
    std::ostringstream text;
    text << in.rdbuf();
    for (const auto& kv : parse_key_values(text.str(), file->string())) {
      apply(cfg, kv);
      seeded = seeded || kv.key == "seed";
    }
  }
  for (const auto& kv : overrides) {
    apply(cfg, kv);
    seeded = seeded || kv.key == "seed";
  }
  if (!seeded) {
    if (const char* env = std::getenv("DUALRATE_SEED"); env && *env) {
      apply(cfg, {"seed", env, "DUALRATE_SEED"});
    }
  }
  cfg.validate();
  return cfg;
}

std::string render_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [name, field] : schema()) out += name + "=" + field.get(cfg) + "\n";
  return out;
}

std::string render_manifest(const RunConfig& cfg, const ManifestInfo& info) {
  std::string out = "# dualrate run manifest\n";
  out += "# version=" + std::string(tool_version()) + "\n";
  out += "# jobs=" + std::to_string(info.jobs) + "\n";
  out += "# wall_clock_seconds=" + format_number(info.wall_clock_seconds) + "\n";
  for (const auto& a : info.artifacts) out += "# artifact=" + a + "\n";
  out += render_config(cfg);
  return out;
}

std::string_view tool_version() { return "0.1.0"; }

}  // namespace dualrate
