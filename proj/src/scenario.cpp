#include "fluxobs/scenario.hpp"

#include <cmath>
#include <random>

namespace fluxobs {

Trace simulate_trace(const ScenarioConfig& config, const TraceOptions& options) {
  config.validate();
  const MotorParams params = config.motor();
  const RotorTrajectory traj = config.trajectory();
  const Vec2 i_dq = config.i_dq_ref;
  const VoltageFn voltage = [&](double t) {
    return synth_feedforward_voltage(traj, i_dq, t, params);
  };

  Trace trace;
  const std::size_t count = config.sample_count();
  if (count == 0) return trace;
  trace.samples.reserve(count);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // The drive is in steady state at t = 0, so earlier samples follow the
  // reference flux exactly.
  const auto steady = [&](double t) {
    MotorState st;
    st.t = t;
    st.lambda = flux_from_current(reference_current(traj, i_dq, t), traj.theta(t), params);
    return st;
  };
  const auto sample_of = [&](const MotorState& state) {
    const GroundTruthSample truth = make_sample(state, voltage(state.t), traj, params);
    TraceSample s;
    s.t = truth.t;
    s.theta = truth.theta;
    s.lambda = truth.lambda;
    s.i = truth.i;
    s.v = truth.v;
    s.x = truth.x;
    s.i_meas = s.i;
    s.v_meas = s.v;
    if (config.noise_i > 0.0) {
      s.i_meas += config.noise_i * Vec2(normal(rng), normal(rng));
    }
    if (config.noise_v > 0.0) {
      s.v_meas += config.noise_v * Vec2(normal(rng), normal(rng));
    }
    return s;
  };

  for (int k = config.interp_order; k > 0; --k) {
    trace.history.push_back(sample_of(steady(-k * config.dt_sample)));
  }
  MotorState state = steady(0.0);
  const int ratio = config.sample_ratio();
  for (std::size_t k = 0; k < count; ++k) {
    if (k > 0) {
      for (int j = 0; j < ratio; ++j) {
        state = step_motor(state, voltage, traj, config.dt_truth, params);
      }
      // Keep the grid exact; the integrator accumulates rounding in t.
      state.t = static_cast<double>(k) * config.dt_sample;
    }
    trace.samples.push_back(sample_of(state));
  }

  RegressorOptions reg_options;
  reg_options.alpha = config.alpha;
  reg_options.dt = config.dt_sample;
  reg_options.interp_order = config.interp_order;
  reg_options.drop_lq_term = options.break_omega1;
  RegressorPipeline pipeline(params, reg_options);
  trace.regressor.reserve(count);
  if (config.diagnostics) trace.d_true.reserve(count);
  for (const TraceSample& s : trace.samples) {
    RegressorSample r = pipeline.step(s.i_meas, s.v_meas);
    r.t = s.t;
    trace.regressor.push_back(r);
    if (config.diagnostics) trace.d_true.push_back(pipeline.true_disturbance(s.i, s.x));
  }
  return trace;
}

namespace {

RunRow base_row(const TraceSample& s, const RegressorSample& r,
                const ObserverOutput& out) {
  RunRow row;
  row.t = s.t;
  row.theta = s.theta;
  row.theta_hat = out.theta_hat;
  row.x = s.x;
  row.x_hat = out.x_hat;
  row.err_flux = (out.x_hat - s.x).norm();
  row.err_angle = angle_diff(out.theta_hat, s.theta);
  row.y = r.y;
  row.phi = r.phi;
  row.d_hat = out.d_hat;
  return row;
}

MeasurementSample measurement(const TraceSample& s, const RegressorSample& r) {
  MeasurementSample m;
  m.t = s.t;
  m.i = s.i_meas;
  m.v = s.v_meas;
  m.phi = r.phi;
  m.y = r.y;
  return m;
}

}  // namespace

RunLog run_observer(const ScenarioConfig& config, const Trace& trace,
                    ObserverKind kind, const RunOptions& options) {
  const MotorParams params = config.motor();
  ObserverNumerics numerics = config.numerics();
  numerics.drop_qe_term = options.drop_qe_term;
  const bool diagnostics = config.diagnostics && !trace.d_true.empty();

  RunLog log;
  log.observer = kind;
  log.rows.reserve(trace.samples.size());
  try {
    if (kind == ObserverKind::kKre) {
      KreObserver observer(params, config.gains(), numerics, config.initial_estimate());
      ManifoldTracker tracker(options.xi0);
      for (const TraceSample& h : trace.history) {
        observer.prime(h.i_meas, h.v_meas, diagnostics ? &tracker : nullptr, h.x);
      }
      for (std::size_t k = 0; k < trace.samples.size(); ++k) {
        const TraceSample& s = trace.samples[k];
        const RegressorSample& r = trace.regressor[k];
        const ObserverOutput out =
            diagnostics ? observer.step(measurement(s, r), &tracker, s.x)
                        : observer.step(measurement(s, r));
        RunRow row = base_row(s, r, out);
        row.q = observer.Q();
        row.Y = observer.Y();
        if (diagnostics) {
          row.d_true = trace.d_true[k];
          row.pi_norm = manifold_residual(observer.Y(), observer.Q(),
                                          out.x_hat - s.x, tracker.xi)
                            .norm();
        }
        log.rows.push_back(row);
      }
    } else {
      GradientObserver observer(kind, params, config.gains(), numerics,
                                config.initial_estimate());
      for (const TraceSample& h : trace.history) observer.prime(h.i_meas, h.v_meas);
      for (std::size_t k = 0; k < trace.samples.size(); ++k) {
        const TraceSample& s = trace.samples[k];
        const RegressorSample& r = trace.regressor[k];
        const ObserverOutput out = observer.step(measurement(s, r));
        RunRow row = base_row(s, r, out);
        if (diagnostics) row.d_true = trace.d_true[k];
        log.rows.push_back(row);
      }
    }
  } catch (const NumericalFault& fault) {
    log.aborted = true;
    log.fault = fault.what();
  }
  log.summary = summarize(log.rows, config);
  return log;
}

std::vector<RunLog> run_scenario(const ScenarioConfig& config,
                                 const TraceOptions& trace_options,
                                 const RunOptions& run_options) {
  const Trace trace = simulate_trace(config, trace_options);
  std::vector<RunLog> logs;
  for (ObserverKind kind : config.observers) {
    logs.push_back(run_observer(config, trace, kind, run_options));
  }
  return logs;
}

RunSummary summarize(const std::vector<RunRow>& rows, const ScenarioConfig& config) {
  RunSummary summary;
  if (rows.empty()) return summary;
  std::vector<double> t, flux, angle;
  std::vector<Vec2> phi;
  t.reserve(rows.size());
  for (const RunRow& r : rows) {
    t.push_back(r.t);
    flux.push_back(r.err_flux);
    angle.push_back(std::abs(r.err_angle));
    phi.push_back(r.phi);
  }
  const double psi = config.psi_m;
  summary.settling_flux_5pct = settling_time(flux, t, 0.05 * psi);
  summary.settling_flux_1pct = settling_time(flux, t, 0.01 * psi);
  summary.settling_angle = settling_time(angle, t, 0.01);
  summary.steady_state_flux_error = tail_mean(flux);
  summary.final_flux_error = flux.back();
  summary.final_angle_error = angle.back();

  const double window = config.pe_window_or_default();
  summary.rate_window_start = window;
  summary.rate_window_end = last_time_above(flux, t, kRateFitFloor * psi);
  if (summary.rate_window_end && *summary.rate_window_end > window) {
    summary.rate = fit_rate(flux, t, window, *summary.rate_window_end);
  }

  if (t.back() - t.front() >= window - 1e-12) {
    try {
      summary.pe = pe_index(phi, window, config.dt_sample, config.pe_delta_min);
    } catch (const std::invalid_argument&) {
    }
  }

  if (rows.front().q) {
    std::vector<Mat2> q;
    double max_y = 0.0;
    for (const RunRow& r : rows) {
      q.push_back(*r.q);
      max_y = std::max(max_y, r.Y->norm());
    }
    summary.max_Y = max_y;
    if (t.back() >= window) summary.q_min_after_window = q_positivity(q, t, window);
  }
  if (rows.front().pi_norm) {
    double max_pi = 0.0;
    for (const RunRow& r : rows) max_pi = std::max(max_pi, *r.pi_norm);
    summary.max_pi = max_pi;
  }
  return summary;
}

}  // namespace fluxobs
