#include "fluxobs/verify.hpp"

#include <cmath>
#include <future>
#include <sstream>

namespace fluxobs {

bool VerifyReport::passed() const {
  for (const CheckResult& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

const CheckResult* VerifyReport::find(const std::string& name) const {
  for (const CheckResult& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

CheckResult missing(const std::string& name, const std::string& why) {
  CheckResult c;
  c.name = name;
  c.value = std::nan("");
  c.detail = why;
  return c;
}

}  // namespace

std::vector<CheckResult> check_regression_identity(const Trace& trace, double alpha) {
  CheckResult residual;
  residual.name = "regression_residual";
  CheckResult decay;
  decay.name = "regression_decay_rate";
  if (trace.d_true.size() != trace.samples.size() || trace.samples.empty()) {
    return {missing(residual.name, "no ground truth"), missing(decay.name, "no ground truth")};
  }

  double max_y = 0.0;
  for (const RegressorSample& r : trace.regressor) max_y = std::max(max_y, std::abs(r.y));
  double max_r = 0.0;
  std::vector<double> early, early_t;
  for (std::size_t k = 0; k < trace.samples.size(); ++k) {
    const TraceSample& s = trace.samples[k];
    const RegressorSample& r = trace.regressor[k];
    const double res = std::abs(r.y - r.phi.dot(s.x) - trace.d_true[k]);
    if (s.t > kRegressionSettle / alpha) max_r = std::max(max_r, res);
    if (s.t <= kRegressionFitSpan / alpha) {
      early.push_back(res);
      early_t.push_back(s.t);
    }
  }
  residual.value = max_y > 0.0 ? max_r / max_y : max_r;
  residual.bound = kRegressionRelTol;
  residual.passed = residual.value < residual.bound;
  residual.detail = "max|r| = " + fmt(max_r) + " for t > 10/alpha, max|y| = " + fmt(max_y);

  const RateFit fit = fit_rate(early, early_t, 0.0, kRegressionFitSpan / alpha);
  decay.value = fit.rate / alpha;
  decay.bound = kRegressionRateTol;
  decay.passed = fit.points >= 2 && std::abs(decay.value - 1.0) <= kRegressionRateTol;
  decay.detail = "fitted rate " + fmt(fit.rate) + " 1/s vs alpha " + fmt(alpha) +
                 ", R^2 " + fmt(fit.r_squared);
  return {residual, decay};
}

CheckResult check_manifold(const RunLog& log, const std::string& name) {
  if (log.aborted) return missing(name, "run aborted: " + log.fault);
  if (!log.summary.max_pi || !log.summary.max_Y) return missing(name, "no ground truth");
  CheckResult c;
  c.name = name;
  c.value = *log.summary.max_pi;
  c.bound = kManifoldTol * (1.0 + *log.summary.max_Y);
  c.passed = c.value < c.bound;
  c.detail = "max|pi| = " + fmt(c.value) + ", max|Y| = " + fmt(*log.summary.max_Y);
  return c;
}

CheckResult check_manifold_perturbed(const RunLog& base, const RunLog& perturbed,
                                     double a, const std::string& name) {
  if (base.aborted || perturbed.aborted) return missing(name, "run aborted");
  if (perturbed.rows.empty() || !perturbed.rows.front().pi_norm || !base.summary.max_pi) {
    return missing(name, "no ground truth");
  }
  const double pi0 = *perturbed.rows.front().pi_norm;
  const double floor = kManifoldFloorFactor * *base.summary.max_pi;
  CheckResult c;
  c.name = name;
  c.bound = kManifoldPerturbTol;
  std::size_t compared = 0;
  double worst = 0.0;
  double t_last = 0.0;
  for (const RunRow& r : perturbed.rows) {
    const double predicted = pi0 * std::exp(-a * r.t);
    if (predicted < floor) break;
    worst = std::max(worst, std::abs(*r.pi_norm - predicted) / predicted);
    t_last = r.t;
    ++compared;
  }
  c.value = worst;
  c.passed = pi0 > 0.0 && compared >= 2 && worst <= c.bound;
  c.detail = "|pi(0)| = " + fmt(pi0) + ", " + std::to_string(compared) +
             " samples up to t = " + fmt(t_last);
  return c;
}

VerifyReport verify_scenario(const ScenarioConfig& config, const VerifyOptions& options) {
  ScenarioConfig base = config;
  base.diagnostics = true;
  TraceOptions trace_options;
  trace_options.break_omega1 = options.break_omega1;
  const Trace trace = simulate_trace(base, trace_options);

  const auto launch = [&](double gamma, const Vec2& xi0) {
    return std::async(std::launch::async, [&trace, &base, &options, gamma, xi0] {
      ScenarioConfig c = base;
      c.gamma = gamma;
      RunOptions run;
      run.xi0 = xi0;
      run.drop_qe_term = options.drop_qe_term;
      return run_observer(c, trace, ObserverKind::kKre, run);
    });
  };
  auto low = launch(options.gamma_low, Vec2::Zero());
  auto high = launch(options.gamma_high, Vec2::Zero());
  auto low_p = launch(options.gamma_low, options.xi_perturbation);
  auto high_p = launch(options.gamma_high, options.xi_perturbation);
  const RunLog run_low = low.get();
  const RunLog run_high = high.get();
  const RunLog run_low_p = low_p.get();
  const RunLog run_high_p = high_p.get();

  VerifyReport report;
  for (CheckResult& c : check_regression_identity(trace, base.alpha)) {
    report.checks.push_back(std::move(c));
  }
  const std::string gl = "gamma=" + fmt(options.gamma_low);
  const std::string gh = "gamma=" + fmt(options.gamma_high);
  report.checks.push_back(check_manifold(run_low, "manifold_invariance " + gl));
  report.checks.push_back(check_manifold(run_high, "manifold_invariance " + gh));
  report.checks.push_back(
      check_manifold_perturbed(run_low, run_low_p, base.a, "manifold_perturbed " + gl));
  report.checks.push_back(
      check_manifold_perturbed(run_high, run_high_p, base.a, "manifold_perturbed " + gh));

  CheckResult pe;
  pe.name = "pe_excited";
  if (run_low.summary.pe) {
    pe.value = run_low.summary.pe->delta_hat;
    pe.bound = run_low.summary.pe->delta_min;
    pe.passed = run_low.summary.pe->excited;
    pe.detail = "worst-window min-eig over T = " + fmt(run_low.summary.pe->window) + " s";
  } else {
    pe = missing(pe.name, "run shorter than one window");
  }
  report.checks.push_back(pe);

  CheckResult q;
  q.name = "q_positive";
  if (run_low.summary.q_min_after_window) {
    q.value = *run_low.summary.q_min_after_window;
    q.passed = q.value > 0.0;
    q.detail = "min-eig Q(t) for t >= T, " + gl;
  } else {
    q = missing(q.name, "run shorter than one window");
  }
  report.checks.push_back(q);

  CheckResult settle;
  settle.name = "settling_order";
  const auto& ts_low = run_low.summary.settling_flux_5pct;
  const auto& ts_high = run_high.summary.settling_flux_5pct;
  if (ts_low && ts_high && !run_low.aborted && !run_high.aborted) {
    settle.value = *ts_high;
    settle.bound = *ts_low;
    settle.passed = *ts_high < *ts_low;
    settle.detail = "5% settling " + gh + ": " + fmt(*ts_high) + " s, " + gl + ": " +
                    fmt(*ts_low) + " s";
  } else {
    settle = missing(settle.name, "a run did not settle");
  }
  report.checks.push_back(settle);

  CheckResult rate;
  rate.name = "rate_order";
  const auto& r_low = run_low.summary.rate;
  const auto& r_high = run_high.summary.rate;
  if (r_low && r_high) {
    rate.value = r_high->rate;
    rate.bound = r_low->rate;
    rate.passed = r_high->rate > r_low->rate;
    rate.detail = "post-T rate " + gh + ": " + fmt(r_high->rate) + " 1/s, " + gl + ": " +
                  fmt(r_low->rate) + " 1/s";
  } else {
    rate = missing(rate.name, "no fit window after T");
  }
  report.checks.push_back(rate);
  return report;
}

nlohmann::json report_to_json(const VerifyReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const CheckResult& c : report.checks) {
    nlohmann::json j;
    j["name"] = c.name;
    j["passed"] = c.passed;
    j["value"] = std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json();
    j["bound"] = c.bound;
    j["detail"] = c.detail;
    checks.push_back(std::move(j));
  }
  return {{"passed", report.passed()}, {"checks", checks}};
}

}  // namespace fluxobs
