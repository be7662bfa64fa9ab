#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fluxobs/motor_model.hpp"

namespace fluxobs {

/// Eigenvalues of a symmetric 2x2 matrix, ascending, in closed form.
std::pair<double, double> sym2_eigenvalues(const Mat2& m);
double min_eigenvalue(const Mat2& m);

struct PEReport {
  double window = 0.0;
  std::vector<double> window_starts;
  /// Smallest eigenvalue of the windowed Gram integral, per window start.
  std::vector<double> window_min_eig;
  double delta_hat = 0.0;  // worst window
  double phi_sup = 0.0;
  double delta_min = 0.0;
  bool excited = false;
};

/// Worst-window excitation level of int_t^{t+T} Phi Phi^T ds (trapezoid
/// rule), evaluated for every window start on the sample grid.
PEReport pe_index(std::span<const Vec2> phi, double window, double dt,
                  double delta_min = 0.0);

/// min over samples with t >= t_after of min-eig Q(t).
double q_positivity(std::span<const Mat2> q, std::span<const double> t,
                    double t_after);

struct RateFit {
  double rate = 0.0;  // 1/s, positive for decay
  double r_squared = 0.0;
  std::size_t points = 0;
  bool clipped = false;  // non-positive samples clipped to 1e-15
};

/// Least-squares slope of log(error) against t on [t_start, t_end].
RateFit fit_rate(std::span<const double> error, std::span<const double> t,
                 double t_start,
                 double t_end = std::numeric_limits<double>::infinity());

/// First time after which every sample stays below `threshold`.
std::optional<double> settling_time(std::span<const double> error,
                                    std::span<const double> t, double threshold);

/// Mean of the final `fraction` of the series.
double tail_mean(std::span<const double> values, double fraction = 0.2);

/// Last sample time at which `error` is still at or above `floor`; used to
/// end a rate fit before the error reaches its numerical floor.
std::optional<double> last_time_above(std::span<const double> error,
                                      std::span<const double> t, double floor);

/// pi = Y - Q x_tilde - xi.
Vec2 manifold_residual(const Vec2& Y, const Mat2& Q, const Vec2& x_tilde,
                       const Vec2& xi);

}  // namespace fluxobs
