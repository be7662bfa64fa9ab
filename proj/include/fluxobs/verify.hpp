#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fluxobs/scenario.hpp"

namespace fluxobs {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double bound = 0.0;
  std::string detail;
};

struct VerifyOptions {
  /// Drop the Lq H1[i] term from Omega1.
  bool break_omega1 = false;
  /// Drop Q E from the Y dynamics.
  bool drop_qe_term = false;
  /// KRE gains compared by the ordering checks.
  double gamma_low = 1.0;
  double gamma_high = 5.0;
  /// Initial xi of the perturbed manifold run.
  Vec2 xi_perturbation{0.01, 0.0};
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool passed() const;
  const CheckResult* find(const std::string& name) const;
};

// Check tolerances.
constexpr double kRegressionRelTol = 1e-6;
constexpr double kRegressionSettle = 10.0;     // residual bound applies for t > 10/alpha
constexpr double kRegressionFitSpan = 5.0;     // decay fitted on [0, 5/alpha]
constexpr double kRegressionRateTol = 0.2;
constexpr double kManifoldTol = 1e-7;
constexpr double kManifoldPerturbTol = 0.01;
/// The perturbed run is compared only where the predicted residual exceeds the
/// unperturbed run's residual by this factor.
constexpr double kManifoldFloorFactor = 1000.0;

/// Regression residual y - Phi^T x - d_true: max for t > 10/alpha relative to
/// max |y|, plus the decay rate fitted on [0, 5/alpha].
std::vector<CheckResult> check_regression_identity(const Trace& trace, double alpha);

/// |Y - Q x_tilde - xi| against 1e-7 (1 + max |Y|).
CheckResult check_manifold(const RunLog& log, const std::string& name);

/// Perturbed-xi run against |pi(0)| e^{-a t} pointwise.
CheckResult check_manifold_perturbed(const RunLog& base, const RunLog& perturbed,
                                     double a, const std::string& name);

/// Runs the full suite on one config: regression identity, manifold
/// invariance at both gains, perturbed manifold, PE, Q positivity, settling
/// and rate ordering between the two KRE gains.
VerifyReport verify_scenario(const ScenarioConfig& config,
                             const VerifyOptions& options = {});

nlohmann::json report_to_json(const VerifyReport& report);

}  // namespace fluxobs
