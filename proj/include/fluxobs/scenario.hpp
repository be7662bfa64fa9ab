#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fluxobs/analysis.hpp"
#include "fluxobs/observers.hpp"
#include "fluxobs/regressor_pipeline.hpp"
#include "fluxobs/scenario_config.hpp"

namespace fluxobs {

/// Ground truth and measurements at one observer sample.
struct TraceSample {
  double t = 0.0;
  double theta = 0.0;  // wrapped
  Vec2 lambda = Vec2::Zero();
  Vec2 i = Vec2::Zero();
  Vec2 v = Vec2::Zero();
  Vec2 x = Vec2::Zero();
  Vec2 i_meas = Vec2::Zero();
  Vec2 v_meas = Vec2::Zero();
};

/// A simulated experiment shared by every observer that runs on it.
struct Trace {
  /// Steady-state motor samples before t = 0, oldest first. The observer
  /// interpolates motor signals through them; the regressor starts at t = 0.
  std::vector<TraceSample> history;
  std::vector<TraceSample> samples;
  std::vector<RegressorSample> regressor;
  std::vector<double> d_true;  // empty without diagnostics
};

struct TraceOptions {
  bool break_omega1 = false;
};

/// Integrates the motor at dt_truth under feedforward voltage, samples it at
/// dt_sample, adds optional measurement noise and runs the regressor bank.
Trace simulate_trace(const ScenarioConfig& config, const TraceOptions& options = {});

/// One CSV row. Optional fields are written empty when absent.
struct RunRow {
  double t = 0.0;
  double theta = 0.0;
  double theta_hat = 0.0;
  Vec2 x = Vec2::Zero();
  Vec2 x_hat = Vec2::Zero();
  double err_flux = 0.0;
  double err_angle = 0.0;
  double y = 0.0;
  Vec2 phi = Vec2::Zero();
  std::optional<double> d_true;
  double d_hat = 0.0;
  std::optional<Mat2> q;
  std::optional<Vec2> Y;
  std::optional<double> pi_norm;
};

struct RunSummary {
  std::optional<double> settling_flux_5pct;
  std::optional<double> settling_flux_1pct;
  std::optional<double> settling_angle;
  std::optional<RateFit> rate;
  double rate_window_start = 0.0;
  std::optional<double> rate_window_end;
  std::optional<double> steady_state_flux_error;
  std::optional<double> final_flux_error;
  std::optional<double> final_angle_error;
  std::optional<PEReport> pe;
  std::optional<double> q_min_after_window;
  std::optional<double> max_pi;
  std::optional<double> max_Y;
};

struct RunLog {
  ObserverKind observer = ObserverKind::kKre;
  std::vector<RunRow> rows;
  RunSummary summary;
  bool aborted = false;
  std::string fault;
};

struct RunOptions {
  /// Initial value of the manifold auxiliary state.
  Vec2 xi0 = Vec2::Zero();
  bool drop_qe_term = false;
};

/// Runs one observer over a trace and summarizes it.
RunLog run_observer(const ScenarioConfig& config, const Trace& trace,
                    ObserverKind kind, const RunOptions& options = {});

/// Runs every observer selected in the config on one shared trace.
std::vector<RunLog> run_scenario(const ScenarioConfig& config,
                                 const TraceOptions& trace_options = {},
                                 const RunOptions& run_options = {});

/// Summary metrics as a pure function of the logged rows.
RunSummary summarize(const std::vector<RunRow>& rows, const ScenarioConfig& config);

/// Relative floor below which the flux error is treated as converged when
/// fitting the exponential rate.
constexpr double kRateFitFloor = 1e-6;

}  // namespace fluxobs
