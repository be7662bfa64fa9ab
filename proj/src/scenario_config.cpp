#include "fluxobs/scenario_config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fluxobs {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string format_message(const std::string& key, int line,
                           const std::string& what) {
  std::ostringstream msg;
  if (line > 0) msg << "line " << line << ": ";
  if (!key.empty()) msg << "key '" << key << "': ";
  msg << what;
  return msg.str();
}

double parse_plain(const std::string& text) {
  std::size_t used = 0;
  const double value = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("trailing characters");
  return value;
}

// Keys whose values depend on pole_pairs are applied after everything else.
const std::set<std::string>& speed_keys() {
  static const std::set<std::string> keys{"speed_rpm", "omega_e", "ramp_end_rpm",
                                          "ramp_end_omega"};
  return keys;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "R",          "Ld",          "Lq",           "psi_m",
      "pole_pairs", "speed_rpm",   "omega_e",      "theta0",
      "ramp_start", "ramp_duration", "ramp_end_rpm", "ramp_end_omega",
      "id_ref",     "iq_ref",      "gamma",        "a",
      "alpha",      "eps",         "dt_truth",     "dt_sample",
      "duration",   "init_angle_offset", "init_mag_scale", "noise_i",
      "noise_v",    "seed",        "observer",     "diagnostics",
      "interp_order", "substeps",  "pe_window",    "pe_delta_min"};
  return keys;
}

int parse_int(const std::string& value) {
  const double d = parse_plain(value);
  if (d != std::floor(d)) throw std::invalid_argument("not an integer");
  return static_cast<int>(d);
}

bool parse_bool(const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw std::invalid_argument("not a boolean");
}

std::vector<ObserverKind> parse_observers(const std::string& value) {
  if (value == "all") {
    return {ObserverKind::kKre, ObserverKind::kGradAut, ObserverKind::kGradTie};
  }
  std::vector<ObserverKind> kinds;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) kinds.push_back(observer_kind_from_string(item));
  }
  if (kinds.empty()) throw std::invalid_argument("empty observer list");
  return kinds;
}

}  // namespace

ConfigError::ConfigError(const std::string& key, int line, const std::string& what)
    : std::runtime_error(format_message(key, line, what)),
      key_(key),
      line_(line),
      detail_(what) {}

double parse_number(const std::string& raw) {
  std::string text = trim(raw);
  if (text.empty()) throw std::invalid_argument("empty number");
  // [coef][*]pi[/div]
  const auto pos = text.find("pi");
  if (pos == std::string::npos) return parse_plain(text);
  std::string coef = trim(text.substr(0, pos));
  std::string rest = trim(text.substr(pos + 2));
  if (!coef.empty() && coef.back() == '*') coef = trim(coef.substr(0, coef.size() - 1));
  double factor = 1.0;
  if (coef == "-") {
    factor = -1.0;
  } else if (!coef.empty() && coef != "+") {
    factor = parse_plain(coef);
  }
  double value = factor * kPi;
  if (!rest.empty()) {
    if (rest.front() != '/') throw std::invalid_argument("bad pi expression");
    const double div = parse_plain(trim(rest.substr(1)));
    if (div == 0.0) throw std::invalid_argument("division by zero");
    value /= div;
  }
  return value;
}

void apply_setting(ScenarioConfig& c, const std::string& key,
                   const std::string& value, int line) {
  if (known_keys().count(key) == 0) throw ConfigError(key, line, "unknown key");
  try {
    if (key == "R") c.R = parse_number(value);
    else if (key == "Ld") c.Ld = parse_number(value);
    else if (key == "Lq") c.Lq = parse_number(value);
    else if (key == "psi_m") c.psi_m = parse_number(value);
    else if (key == "pole_pairs") c.pole_pairs = parse_int(value);
    else if (key == "speed_rpm") c.omega_e = rpm_to_electrical(parse_number(value), c.pole_pairs);
    else if (key == "omega_e") c.omega_e = parse_number(value);
    else if (key == "theta0") c.theta0 = parse_number(value);
    else if (key == "ramp_start") c.ramp_start = parse_number(value);
    else if (key == "ramp_duration") c.ramp_duration = parse_number(value);
    else if (key == "ramp_end_rpm") c.ramp_end_omega = rpm_to_electrical(parse_number(value), c.pole_pairs);
    else if (key == "ramp_end_omega") c.ramp_end_omega = parse_number(value);
    else if (key == "id_ref") c.i_dq_ref.x() = parse_number(value);
    else if (key == "iq_ref") c.i_dq_ref.y() = parse_number(value);
    else if (key == "gamma") c.gamma = parse_number(value);
    else if (key == "a") c.a = parse_number(value);
    else if (key == "alpha") c.alpha = parse_number(value);
    else if (key == "eps") c.eps = parse_number(value);
    else if (key == "dt_truth") c.dt_truth = parse_number(value);
    else if (key == "dt_sample") c.dt_sample = parse_number(value);
    else if (key == "duration") c.duration = parse_number(value);
    else if (key == "init_angle_offset") c.init_angle_offset = parse_number(value);
    else if (key == "init_mag_scale") c.init_mag_scale = parse_number(value);
    else if (key == "noise_i") c.noise_i = parse_number(value);
    else if (key == "noise_v") c.noise_v = parse_number(value);
    else if (key == "seed") c.seed = static_cast<unsigned long long>(parse_int(value));
    else if (key == "observer") c.observers = parse_observers(value);
    else if (key == "diagnostics") c.diagnostics = parse_bool(value);
    else if (key == "interp_order") c.interp_order = parse_int(value);
    else if (key == "substeps") c.substeps = parse_int(value);
    else if (key == "pe_window") c.pe_window = parse_number(value);
    else if (key == "pe_delta_min") c.pe_delta_min = parse_number(value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, line, "invalid value '" + value + "' (" + e.what() + ")");
  }
}

ScenarioConfig parse_config(const std::string& text) {
  struct Entry {
    std::string key;
    std::string value;
    int line;
  };
  std::vector<Entry> entries;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", line_no, "expected 'key = value'");
    }
    Entry entry{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (entry.key.empty()) throw ConfigError("", line_no, "empty key");
    if (known_keys().count(entry.key) == 0) {
      throw ConfigError(entry.key, line_no, "unknown key");
    }
    if (entry.value.empty()) throw ConfigError(entry.key, line_no, "empty value");
    if (auto it = seen.find(entry.key); it != seen.end()) {
      throw ConfigError(entry.key, line_no,
                        "duplicate key (first set on line " +
                            std::to_string(it->second) + ")");
    }
    seen.emplace(entry.key, line_no);
    entries.push_back(entry);
  }

  for (const char* required : {"R", "Ld", "Lq", "psi_m", "pole_pairs", "duration"}) {
    if (seen.count(required) == 0) throw ConfigError(required, 0, "missing required key");
  }
  if (seen.count("speed_rpm") == 0 && seen.count("omega_e") == 0) {
    throw ConfigError("speed_rpm", 0, "missing required key (or omega_e)");
  }
  if (seen.count("speed_rpm") != 0 && seen.count("omega_e") != 0) {
    throw ConfigError("omega_e", seen["omega_e"], "conflicts with speed_rpm");
  }
  if (seen.count("ramp_end_rpm") != 0 && seen.count("ramp_end_omega") != 0) {
    throw ConfigError("ramp_end_omega", seen["ramp_end_omega"],
                      "conflicts with ramp_end_rpm");
  }

  ScenarioConfig config;
  for (const Entry& e : entries) {
    if (speed_keys().count(e.key) == 0) apply_setting(config, e.key, e.value, e.line);
  }
  if (config.pole_pairs < 1) {
    throw ConfigError("pole_pairs", seen["pole_pairs"], "must be >= 1");
  }
  for (const Entry& e : entries) {
    if (speed_keys().count(e.key) != 0) apply_setting(config, e.key, e.value, e.line);
  }
  const bool ramp_given = seen.count("ramp_end_rpm") || seen.count("ramp_end_omega");
  if (ramp_given && seen.count("ramp_duration") == 0) {
    throw ConfigError("ramp_duration", 0, "required when a ramp end speed is set");
  }
  if (!ramp_given && config.ramp_duration > 0.0) {
    throw ConfigError("ramp_duration", seen["ramp_duration"],
                      "needs ramp_end_rpm or ramp_end_omega");
  }

  try {
    config.validate();
  } catch (ConfigError& err) {
    const auto it = seen.find(err.key());
    if (it != seen.end() && err.line() == 0) throw ConfigError(err.key(), it->second, err.detail());
    throw;
  }
  return config;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

// ---------------------------------------------------------------------------

MotorParams ScenarioConfig::motor() const {
  return MotorParams(R, Ld, Lq, psi_m, pole_pairs);
}

RotorTrajectory ScenarioConfig::trajectory() const {
  RotorTrajectory traj = RotorTrajectory::constant(omega_e, theta0);
  if (ramp_duration > 0.0) {
    if (ramp_start > 0.0) traj.hold(ramp_start);
    traj.ramp(ramp_duration, ramp_end_omega);
  }
  return traj;
}

ObserverGains ScenarioConfig::gains() const {
  ObserverGains g;
  g.gamma = gamma;
  g.a = a;
  g.alpha = alpha;
  g.eps = sigma_eps();
  return g;
}

ObserverNumerics ScenarioConfig::numerics() const {
  ObserverNumerics n;
  n.dt = dt_sample;
  n.interp_order = interp_order;
  n.substeps = substeps;
  return n;
}

int ScenarioConfig::sample_ratio() const {
  return static_cast<int>(std::llround(dt_sample / dt_truth));
}

std::size_t ScenarioConfig::sample_count() const {
  if (duration <= 0.0) return 0;
  return static_cast<std::size_t>(std::llround(duration / dt_sample)) + 1;
}

double ScenarioConfig::pe_window_or_default() const {
  if (pe_window) return *pe_window;
  const double w = std::abs(trajectory().mean_speed(duration));
  return w > 0.0 ? 2.0 * kPi / w : duration;
}

Vec2 ScenarioConfig::initial_estimate() const {
  return init_mag_scale * psi_m * unit_vector(theta0 + init_angle_offset);
}

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError(key, 0, what);
  };
  require(R > 0.0, "R", "must be > 0");
  require(Ld > 0.0, "Ld", "must be > 0");
  require(Lq > 0.0, "Lq", "must be > 0");
  require(psi_m > 0.0, "psi_m", "must be > 0");
  require(pole_pairs >= 1, "pole_pairs", "must be >= 1");
  require(duration >= 0.0, "duration", "must be >= 0");
  require(gamma > 0.0, "gamma", "must be > 0");
  require(a > 0.0, "a", "must be > 0");
  require(alpha > 0.0, "alpha", "must be > 0");
  require(sigma_eps() > 0.0, "eps", "must be > 0");
  require(dt_truth > 0.0, "dt_truth", "must be > 0");
  require(dt_sample > 0.0, "dt_sample", "must be > 0");
  const double ratio = dt_sample / dt_truth;
  require(std::abs(ratio - std::round(ratio)) < 1e-9 * ratio && ratio >= 1.0 - 1e-12,
          "dt_sample", "must be an integer multiple of dt_truth");
  require(noise_i >= 0.0, "noise_i", "must be >= 0");
  require(noise_v >= 0.0, "noise_v", "must be >= 0");
  require(init_mag_scale >= 0.0, "init_mag_scale", "must be >= 0");
  require(interp_order >= 0 && interp_order <= 8, "interp_order", "must be in [0, 8]");
  require(substeps >= 1, "substeps", "must be >= 1");
  require(ramp_duration >= 0.0, "ramp_duration", "must be >= 0");
  require(ramp_start >= 0.0, "ramp_start", "must be >= 0");
  require(!pe_window || *pe_window > 0.0, "pe_window", "must be > 0");
  require(!observers.empty(), "observer", "empty observer list");
}

}  // namespace fluxobs
