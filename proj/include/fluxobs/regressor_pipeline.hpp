#pragma once

#include <memory>

#include "fluxobs/lti_filters.hpp"
#include "fluxobs/motor_model.hpp"

namespace fluxobs {

struct RegressorOptions {
  double alpha = 200.0 * kPi;
  double dt = 1e-4;
  /// Lagrange order of the input reconstruction inside every filter; 0 is a
  /// plain zero-order hold.
  int interp_order = 5;
  /// Mutation switch: drops the Lq H1[i] term from Omega1.
  bool drop_lq_term = false;
};

struct RegressorSample {
  double t = 0.0;
  Vec2 omega1 = Vec2::Zero();
  Vec2 omega2 = Vec2::Zero();
  Vec2 phi = Vec2::Zero();
  double y = 0.0;
};

/// x/|x| when |x| >= eps, otherwise zero.
Vec2 sigma(const Vec2& x_hat, double eps);

/// Filter bank turning measured (i, v) into the regression y = Phi^T x + d.
class RegressorPipeline {
 public:
  RegressorPipeline(const MotorParams& params, const RegressorOptions& options);

  /// Consumes one measurement sample and returns the regression signals at
  /// that sample time.
  RegressorSample step(const Vec2& i, const Vec2& v);

  /// d_hat = -ell H1[i^T sigma(x_hat)], one sample.
  double disturbance_estimate(const Vec2& i, const Vec2& x_hat, double eps);

  /// d = -ell H1[i^T x/|x|] from the true active flux. Diagnostics only.
  double true_disturbance(const Vec2& i, const Vec2& x_true);

  const MotorParams& params() const { return params_; }
  const RegressorOptions& options() const { return options_; }
  std::size_t steps() const { return steps_; }

 private:
  MotorParams params_;
  RegressorOptions options_;
  std::shared_ptr<const LagWeights> weights_;
  LowPassFilter<Vec2> drive_;       // H2[v - R i]
  HighPassFilter<Vec2> current_hp_; // H1[i]
  LowPassFilter<Vec2> current_lp_;  // H2[i]
  LowPassFilter<double> cross_lp_;  // H2[Omega2^T Omega1]
  HighPassFilter<double> d_hat_hp_;
  HighPassFilter<double> d_true_hp_;
  std::size_t steps_ = 0;
};

}  // namespace fluxobs
