#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluxobs/motor_model.hpp"
#include "fluxobs/observers.hpp"

namespace fluxobs {

/// Config error naming the offending key and line (line 0 when not tied to a
/// line, e.g. a missing key).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, int line, const std::string& what);
  const std::string& key() const { return key_; }
  int line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string key_;
  int line_;
  std::string detail_;
};

struct ScenarioConfig {
  // Motor
  double R = 0.0;
  double Ld = 0.0;
  double Lq = 0.0;
  double psi_m = 0.0;
  int pole_pairs = 0;

  // Rotor trajectory: constant start speed, optional ramp.
  double omega_e = 0.0;  // rad/s electrical
  double theta0 = 0.0;
  double ramp_start = 0.0;
  double ramp_duration = 0.0;  // 0 disables the ramp
  double ramp_end_omega = 0.0;

  Vec2 i_dq_ref{0.0, 2.0};

  // Observer tuning
  double gamma = 1.0;
  double a = 20.0 * kPi;
  double alpha = 200.0 * kPi;
  std::optional<double> eps;  // default 0.1 psi_m

  // Timing
  double dt_truth = 1e-5;
  double dt_sample = 1e-4;
  double duration = 0.0;

  // Initial estimate: lambda_hat(0) = scale psi_m c(theta(0) + offset)
  double init_angle_offset = -kPi / 2.0;
  double init_mag_scale = 2.0;

  double noise_i = 0.0;
  double noise_v = 0.0;
  unsigned long long seed = 0;

  std::vector<ObserverKind> observers{ObserverKind::kKre};
  bool diagnostics = true;

  // Numerics
  int interp_order = 5;
  int substeps = 8;

  // Analysis
  std::optional<double> pe_window;  // default one electrical period
  double pe_delta_min = 0.0;

  MotorParams motor() const;
  RotorTrajectory trajectory() const;
  ObserverGains gains() const;
  ObserverNumerics numerics() const;
  double sigma_eps() const { return eps.value_or(0.1 * psi_m); }
  /// dt_sample / dt_truth
  int sample_ratio() const;
  std::size_t sample_count() const;
  double pe_window_or_default() const;
  Vec2 initial_estimate() const;

  /// Re-checks every invariant; throws ConfigError.
  void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment. Numbers accept a `pi`
/// factor (`200pi`, `200*pi`, `pi/2`, `-pi/2`).
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Parses a number with the optional pi notation; throws std::invalid_argument.
double parse_number(const std::string& text);

/// Applies a single `key = value` override (CLI flags use this).
void apply_setting(ScenarioConfig& config, const std::string& key,
                   const std::string& value, int line = 0);

}  // namespace fluxobs
