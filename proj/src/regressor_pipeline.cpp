#include "fluxobs/regressor_pipeline.hpp"

namespace fluxobs {

Vec2 sigma(const Vec2& x_hat, double eps) {
  const double norm = x_hat.norm();
  if (norm >= eps && norm > 0.0) return x_hat / norm;
  return Vec2::Zero();
}

RegressorPipeline::RegressorPipeline(const MotorParams& params,
                                     const RegressorOptions& options)
    : params_(params),
      options_(options),
      weights_(std::make_shared<const LagWeights>(options.alpha, options.dt,
                                                  options.interp_order)),
      drive_(weights_),
      current_hp_(weights_),
      current_lp_(weights_),
      cross_lp_(weights_),
      d_hat_hp_(weights_),
      d_true_hp_(weights_) {}

RegressorSample RegressorPipeline::step(const Vec2& i, const Vec2& v) {
  const double alpha = options_.alpha;
  const double lq_gain = options_.drop_lq_term ? 0.0 : params_.Lq();

  const Vec2& drive = drive_.step(v - params_.R() * i);
  const Vec2& i_hp = current_hp_.step(i);
  const Vec2& i_lp = current_lp_.step(i);

  RegressorSample s;
  s.t = static_cast<double>(steps_) * options_.dt;
  // H2[p i] is realized as H1[i]; the current is never differentiated.
  s.omega1 = drive - lq_gain * i_hp;
  s.omega2 = s.omega1 - params_.L0() * i_hp;
  s.phi = s.omega1 + s.omega2;
  const double cross = cross_lp_.step(s.omega2.dot(s.omega1));
  s.y = params_.L0() * i_lp.dot(s.omega1) + s.omega1.squaredNorm() / alpha +
        cross / alpha;
  ++steps_;
  return s;
}

double RegressorPipeline::disturbance_estimate(const Vec2& i, const Vec2& x_hat,
                                               double eps) {
  return -params_.ell() * d_hat_hp_.step(i.dot(sigma(x_hat, eps)));
}

double RegressorPipeline::true_disturbance(const Vec2& i, const Vec2& x_true) {
  const double norm = x_true.norm();
  if (norm == 0.0) throw DegenerateFluxError();
  return -params_.ell() * d_true_hp_.step(i.dot(x_true / norm));
}

}  // namespace fluxobs
