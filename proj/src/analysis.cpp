#include "fluxobs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fluxobs {

std::pair<double, double> sym2_eigenvalues(const Mat2& m) {
  const double mean = 0.5 * (m(0, 0) + m(1, 1));
  const double half_diff = 0.5 * (m(0, 0) - m(1, 1));
  const double off = 0.5 * (m(0, 1) + m(1, 0));
  const double radius = std::hypot(half_diff, off);
  return {mean - radius, mean + radius};
}

double min_eigenvalue(const Mat2& m) { return sym2_eigenvalues(m).first; }

PEReport pe_index(std::span<const Vec2> phi, double window, double dt,
                  double delta_min) {
  if (!(window > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("pe_index: window and dt must be positive");
  }
  const auto steps = static_cast<std::size_t>(std::llround(window / dt));
  if (steps == 0 || phi.size() < steps + 1) {
    throw std::invalid_argument("pe_index: series shorter than one window");
  }
  PEReport report;
  report.window = window;
  report.delta_min = delta_min;
  for (const Vec2& p : phi) report.phi_sup = std::max(report.phi_sup, p.norm());

  // Running trapezoid integral via prefix sums of the outer products.
  std::vector<Mat2> prefix(phi.size(), Mat2::Zero());
  for (std::size_t k = 1; k < phi.size(); ++k) {
    prefix[k] = prefix[k - 1] + 0.5 * dt *
                                    (phi[k - 1] * phi[k - 1].transpose() +
                                     phi[k] * phi[k].transpose());
  }
  const std::size_t windows = phi.size() - steps;
  report.window_starts.reserve(windows);
  report.window_min_eig.reserve(windows);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < windows; ++k) {
    const Mat2 gram = prefix[k + steps] - prefix[k];
    const double eig = std::max(0.0, min_eigenvalue(gram));
    report.window_starts.push_back(static_cast<double>(k) * dt);
    report.window_min_eig.push_back(eig);
    worst = std::min(worst, eig);
  }
  report.delta_hat = worst;
  report.excited = worst > delta_min;
  return report;
}

double q_positivity(std::span<const Mat2> q, std::span<const double> t,
                    double t_after) {
  if (q.size() != t.size()) throw std::invalid_argument("q_positivity: size mismatch");
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (t[k] >= t_after) worst = std::min(worst, min_eigenvalue(q[k]));
  }
  if (!std::isfinite(worst)) throw std::invalid_argument("q_positivity: empty window");
  return worst;
}

RateFit fit_rate(std::span<const double> error, std::span<const double> t,
                 double t_start, double t_end) {
  if (error.size() != t.size()) throw std::invalid_argument("fit_rate: size mismatch");
  RateFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < error.size(); ++k) {
    if (t[k] < t_start || t[k] > t_end) continue;
    double e = error[k];
    if (!(e > 0.0)) {
      e = 1e-15;
      fit.clipped = true;
    }
    const double x = t[k];
    const double y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++n;
  }
  fit.points = n;
  if (n < 2) return fit;
  const double dn = static_cast<double>(n);
  const double cov = sxy - sx * sy / dn;
  const double var_x = sxx - sx * sx / dn;
  const double var_y = syy - sy * sy / dn;
  if (!(var_x > 0.0)) return fit;
  const double slope = cov / var_x;
  fit.rate = -slope;
  fit.r_squared = var_y > 0.0 ? (cov * cov) / (var_x * var_y) : 1.0;
  return fit;
}

std::optional<double> settling_time(std::span<const double> error,
                                    std::span<const double> t, double threshold) {
  if (error.size() != t.size()) {
    throw std::invalid_argument("settling_time: size mismatch");
  }
  if (error.empty()) return std::nullopt;
  std::size_t k = error.size();
  while (k > 0 && error[k - 1] < threshold) --k;
  if (k == error.size()) return std::nullopt;
  return t[k];
}

double tail_mean(std::span<const double> values, double fraction) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(fraction * values.size())));
  double sum = 0.0;
  for (std::size_t k = values.size() - count; k < values.size(); ++k) {
    sum += values[k];
  }
  return sum / static_cast<double>(count);
}

std::optional<double> last_time_above(std::span<const double> error,
                                      std::span<const double> t, double floor) {
  for (std::size_t k = error.size(); k > 0; --k) {
    if (error[k - 1] >= floor) return t[k - 1];
  }
  return std::nullopt;
}

Vec2 manifold_residual(const Vec2& Y, const Mat2& Q, const Vec2& x_tilde,
                       const Vec2& xi) {
  return Y - Q * x_tilde - xi;
}

}  // namespace fluxobs
