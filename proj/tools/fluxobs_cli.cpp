// fluxobs: simulate flux observers on a scenario config.
//
//   fluxobs simulate <cfg> [--seed N] [--out DIR]
//   fluxobs compare  <cfg> --observers kre,grad_aut,grad_tie
//   fluxobs verify   <cfg> [--break-omega1] [--drop-qe]
//   fluxobs pe       <cfg>
//   fluxobs sweep    <cfg> --param gamma|a|alpha --values 1,5
//
// Exit codes: 0 ok, 1 check failed, 2 usage or config error, 3 numerical fault.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fluxobs/run_log.hpp"
#include "fluxobs/scenario.hpp"
#include "fluxobs/scenario_config.hpp"
#include "fluxobs/verify.hpp"

namespace fs = std::filesystem;
using namespace fluxobs;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kUsage = 2, kFault = 3 };

struct Common {
  std::string config_path;
  std::optional<unsigned long long> seed;
  std::vector<std::string> settings;  // key=value
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool with_out) {
  cmd->add_option("config", c.config_path, "scenario config file")->required();
  cmd->add_option("--seed", c.seed, "noise seed (overrides the config)");
  cmd->add_option("--set", c.settings, "override a config key, key=value")
      ->type_name("KEY=VALUE");
  if (with_out) cmd->add_option("--out", c.out, "output directory");
}

ScenarioConfig load(const Common& c) {
  ScenarioConfig config = load_config(c.config_path);
  for (const std::string& s : c.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(s, 0, "--set expects key=value");
    }
    apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
  }
  if (c.seed) config.seed = *c.seed;
  config.validate();
  return config;
}

std::vector<ObserverKind> parse_observer_list(const std::vector<std::string>& names) {
  std::vector<ObserverKind> kinds;
  for (const std::string& n : names) {
    if (n == "all") {
      kinds = {ObserverKind::kKre, ObserverKind::kGradAut, ObserverKind::kGradTie};
    } else {
      kinds.push_back(observer_kind_from_string(n));
    }
  }
  return kinds;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

// Writes <dir>/<observer>.csv per run and <dir>/metrics.json.
void write_runs(const fs::path& dir, const std::vector<RunLog>& logs,
                const ScenarioConfig& config) {
  fs::create_directories(dir);
  nlohmann::json metrics = nlohmann::json::array();
  for (const RunLog& log : logs) {
    std::ofstream f(dir / (to_string(log.observer) + ".csv"), std::ios::binary);
    if (!f) throw std::runtime_error("cannot write into " + dir.string());
    write_csv(f, log.rows);
    metrics.push_back(run_to_json(log, config));
  }
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
}

std::string opt(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", *v);
  return buf;
}

void print_table(const std::vector<RunLog>& logs) {
  std::printf("%-9s %10s %10s %10s %10s %12s %12s\n", "observer", "ts5 [s]", "ts1 [s]",
              "tsang [s]", "rate", "final |x~|", "steady |x~|");
  for (const RunLog& log : logs) {
    const RunSummary& s = log.summary;
    std::printf("%-9s %10s %10s %10s %10s %12s %12s%s\n", to_string(log.observer).c_str(),
                opt(s.settling_flux_5pct).c_str(), opt(s.settling_flux_1pct).c_str(),
                opt(s.settling_angle).c_str(),
                opt(s.rate ? std::optional<double>(s.rate->rate) : std::nullopt).c_str(),
                opt(s.final_flux_error).c_str(), opt(s.steady_state_flux_error).c_str(),
                log.aborted ? "  ABORTED" : "");
  }
}

std::vector<RunLog> run_parallel(const ScenarioConfig& config, const Trace& trace,
                                 const std::vector<ObserverKind>& kinds,
                                 const RunOptions& options) {
  std::vector<std::future<RunLog>> jobs;
  for (ObserverKind kind : kinds) {
    jobs.push_back(std::async(std::launch::async, [&, kind] {
      return run_observer(config, trace, kind, options);
    }));
  }
  std::vector<RunLog> logs;
  for (auto& j : jobs) logs.push_back(j.get());
  return logs;
}

int report_faults(const std::vector<RunLog>& logs) {
  int code = kOk;
  for (const RunLog& log : logs) {
    if (log.aborted) {
      std::cerr << to_string(log.observer) << ": " << log.fault << "\n";
      code = kFault;
    }
  }
  return code;
}

int cmd_simulate(const Common& c, const std::vector<std::string>& observers) {
  ScenarioConfig config = load(c);
  if (!observers.empty()) config.observers = parse_observer_list(observers);
  const Trace trace = simulate_trace(config);
  const std::vector<RunLog> logs = run_parallel(config, trace, config.observers, {});
  write_runs(c.out, logs, config);
  print_table(logs);
  return report_faults(logs);
}

int cmd_compare(const Common& c, const std::vector<std::string>& observers) {
  ScenarioConfig config = load(c);
  config.observers = parse_observer_list(observers);
  const Trace trace = simulate_trace(config);
  const std::vector<RunLog> logs = run_parallel(config, trace, config.observers, {});
  if (!c.out.empty()) write_runs(c.out, logs, config);
  std::printf("gamma = %g, a = %g, alpha = %g\n", config.gamma, config.a, config.alpha);
  print_table(logs);
  return report_faults(logs);
}

int cmd_verify(const Common& c, const VerifyOptions& options, bool json) {
  const ScenarioConfig config = load(c);
  const VerifyReport report = verify_scenario(config, options);
  const nlohmann::json verdict = report_to_json(report);
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    write_text(fs::path(c.out) / "verify.json", verdict.dump(2) + "\n");
  }
  if (json) {
    std::cout << verdict.dump(2) << "\n";
  } else {
    for (const CheckResult& check : report.checks) {
      std::printf("%s  %-28s %s\n", check.passed ? "PASS" : "FAIL", check.name.c_str(),
                  check.detail.c_str());
    }
  }
  for (const CheckResult& check : report.checks) {
    if (!check.passed) std::cerr << "failed check: " << check.name << "\n";
  }
  return report.passed() ? kOk : kCheckFailed;
}

int cmd_pe(const Common& c) {
  const ScenarioConfig config = load(c);
  const Trace trace = simulate_trace(config);
  std::vector<Vec2> phi;
  phi.reserve(trace.regressor.size());
  for (const RegressorSample& r : trace.regressor) phi.push_back(r.phi);
  const PEReport pe = pe_index(phi, config.pe_window_or_default(), config.dt_sample,
                               config.pe_delta_min);
  nlohmann::json j = {{"window", pe.window},
                      {"delta_hat", pe.delta_hat},
                      {"delta_min", pe.delta_min},
                      {"phi_sup", pe.phi_sup},
                      {"excited", pe.excited}};
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    write_text(fs::path(c.out) / "pe.json", j.dump(2) + "\n");
  }
  std::cout << j.dump(2) << "\n";
  return pe.excited ? kOk : kCheckFailed;
}

int cmd_sweep(const Common& c, const std::string& param,
              const std::vector<std::string>& values,
              const std::vector<std::string>& observers) {
  const ScenarioConfig base = load(c);
  std::vector<ObserverKind> kinds =
      observers.empty() ? base.observers : parse_observer_list(observers);

  struct Entry {
    std::string value;
    std::vector<RunLog> logs;
  };
  std::vector<std::future<Entry>> jobs;
  for (const std::string& v : values) {
    ScenarioConfig config = base;
    apply_setting(config, param, v);
    config.validate();
    jobs.push_back(std::async(std::launch::async, [config, kinds, v] {
      const Trace trace = simulate_trace(config);
      Entry e{v, {}};
      for (ObserverKind kind : kinds) e.logs.push_back(run_observer(config, trace, kind));
      return e;
    }));
  }

  nlohmann::json out = nlohmann::json::array();
  std::printf("%-12s %-9s %-10s %10s %10s %12s\n", param.c_str(), "observer", "outcome",
              "ts5 [s]", "rate", "final |x~|");
  for (auto& job : jobs) {
    const Entry e = job.get();
    for (const RunLog& log : e.logs) {
      const RunSummary& s = log.summary;
      const bool converged = !log.aborted && s.final_flux_error &&
                             *s.final_flux_error < 0.01 * base.psi_m;
      const char* outcome = log.aborted ? "diverged" : converged ? "converged" : "no-conv";
      std::printf("%-12s %-9s %-10s %10s %10s %12s\n", e.value.c_str(),
                  to_string(log.observer).c_str(), outcome,
                  opt(s.settling_flux_5pct).c_str(),
                  opt(s.rate ? std::optional<double>(s.rate->rate) : std::nullopt).c_str(),
                  opt(s.final_flux_error).c_str());
      nlohmann::json j = summary_to_json(s);
      j["param"] = param;
      j["value"] = e.value;
      j["observer"] = to_string(log.observer);
      j["outcome"] = outcome;
      if (log.aborted) j["fault"] = log.fault;
      out.push_back(std::move(j));
    }
  }
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    write_text(fs::path(c.out) / "sweep.json", out.dump(2) + "\n");
  }
  // A diverged entry is a sweep outcome, not a failure.
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensorless flux observer simulator"};
  app.require_subcommand(1);

  Common sim_c, cmp_c, ver_c, pe_c, sw_c;
  sim_c.out = "fluxobs_out";

  std::vector<std::string> sim_observers;
  auto* sim = app.add_subcommand("simulate", "run the configured observers, write CSV");
  add_common(sim, sim_c, true);
  sim->add_option("--observer", sim_observers, "kre, grad_aut, grad_tie or all")
      ->delimiter(',');

  std::vector<std::string> cmp_observers{"kre", "grad_aut", "grad_tie"};
  auto* cmp = app.add_subcommand("compare", "run observers on one shared trace");
  add_common(cmp, cmp_c, true);
  cmp->add_option("--observers", cmp_observers, "observer list")->delimiter(',');

  VerifyOptions vopt;
  bool ver_json = false;
  auto* ver = app.add_subcommand("verify", "run the verification checks");
  add_common(ver, ver_c, true);
  ver->add_flag("--break-omega1", vopt.break_omega1, "drop the Lq H1[i] term from Omega1");
  ver->add_flag("--drop-qe", vopt.drop_qe_term, "drop Q E from the Y dynamics");
  ver->add_option("--gamma-low", vopt.gamma_low, "lower KRE gain")->capture_default_str();
  ver->add_option("--gamma-high", vopt.gamma_high, "higher KRE gain")->capture_default_str();
  ver->add_flag("--json", ver_json, "print the JSON verdict");

  auto* pe = app.add_subcommand("pe", "persistency-of-excitation report");
  add_common(pe, pe_c, true);

  std::string sw_param;
  std::vector<std::string> sw_values, sw_observers;
  auto* sw = app.add_subcommand("sweep", "sweep one gain");
  add_common(sw, sw_c, true);
  sw->add_option("--param", sw_param, "gamma, a or alpha")
      ->required()
      ->check(CLI::IsMember({"gamma", "a", "alpha"}));
  sw->add_option("--values", sw_values, "values, pi notation allowed (2000pi)")
      ->required()
      ->delimiter(',');
  sw->add_option("--observer", sw_observers, "observer list")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) return cmd_simulate(sim_c, sim_observers);
    if (*cmp) return cmd_compare(cmp_c, cmp_observers);
    if (*ver) return cmd_verify(ver_c, vopt, ver_json);
    if (*pe) return cmd_pe(pe_c);
    if (*sw) return cmd_sweep(sw_c, sw_param, sw_values, sw_observers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalFault& e) {
    std::cerr << "numerical fault: " << e.what() << "\n";
    return kFault;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
