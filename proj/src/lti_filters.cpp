#include "fluxobs/lti_filters.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace fluxobs {

namespace {

constexpr int kGaussPoints = 24;

struct GaussRule {
  std::array<double, kGaussPoints> nodes{};
  std::array<double, kGaussPoints> weights{};
};

// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
GaussRule make_gauss_rule() {
  GaussRule rule;
  const int n = kGaussPoints;
  for (int k = 0; k < n; ++k) {
    double x = std::cos(kPi * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[k] = x;
    rule.weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

const GaussRule& gauss_rule() {
  static const GaussRule rule = make_gauss_rule();
  return rule;
}

}  // namespace

std::vector<double> lagrange_basis(std::size_t count, double tau) {
  if (count == 0) throw std::invalid_argument("lagrange_basis: no nodes");
  std::vector<double> basis(count, 1.0);
  for (std::size_t j = 0; j < count; ++j) {
    const double node_j = -static_cast<double>(j);
    for (std::size_t q = 0; q < count; ++q) {
      if (q == j) continue;
      const double node_q = -static_cast<double>(q);
      basis[j] *= (tau - node_q) / (node_j - node_q);
    }
  }
  return basis;
}

LagWeights::LagWeights(double alpha, double dt, int max_order)
    : alpha_(alpha), dt_(dt), decay_(std::exp(-alpha * dt)) {
  if (!(alpha > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("filter needs alpha > 0 and dt > 0");
  }
  if (max_order < 0) throw std::invalid_argument("negative interpolation order");
  const double ah = alpha * dt;
  const GaussRule& rule = gauss_rule();
  weights_.resize(static_cast<std::size_t>(max_order) + 1);
  // Order 0 in closed form so the held-input update is exact.
  weights_[0] = {-std::expm1(-ah)};
  for (int order = 1; order <= max_order; ++order) {
    std::vector<double>& w = weights_[order];
    w.assign(static_cast<std::size_t>(order) + 1, 0.0);
    // integral over tau in [-1, 0] of ah * exp(ah tau) * l_j(tau)
    for (int g = 0; g < kGaussPoints; ++g) {
      const double tau = 0.5 * (rule.nodes[g] - 1.0);
      const double kernel = 0.5 * rule.weights[g] * ah * std::exp(ah * tau);
      const std::vector<double> basis =
          lagrange_basis(static_cast<std::size_t>(order) + 1, tau);
      for (int j = 0; j <= order; ++j) w[j] += kernel * basis[j];
    }
  }
}

LowPassState LowPassState::make(double alpha, double dt, double z0) {
  if (!(alpha > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("filter needs alpha > 0 and dt > 0");
  }
  return LowPassState{z0, alpha, dt, std::exp(-alpha * dt)};
}

LowPassState h2_step(const LowPassState& state, double u) {
  LowPassState next = state;
  next.z = state.decay * state.z + (1.0 - state.decay) * u;
  return next;
}

std::pair<LowPassState, double> h1_step(const LowPassState& state, double u) {
  LowPassState next = h2_step(state, u);
  return {next, state.alpha * (u - next.z)};
}

}  // namespace fluxobs
