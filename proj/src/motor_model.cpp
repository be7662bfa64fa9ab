#include "fluxobs/motor_model.hpp"

#include <cmath>
#include <sstream>

namespace fluxobs {

MotorParams::MotorParams(double resistance, double l_d, double l_q,
                         double psi_m, int pole_pairs)
    : r_(resistance), l_d_(l_d), l_q_(l_q), psi_m_(psi_m),
      pole_pairs_(pole_pairs) {
  if (!(resistance > 0.0) || !(l_d > 0.0) || !(l_q > 0.0) || !(psi_m > 0.0) ||
      pole_pairs < 1) {
    std::ostringstream msg;
    msg << "invalid motor parameters: R=" << resistance << " Ld=" << l_d
        << " Lq=" << l_q << " psi_m=" << psi_m << " pole_pairs=" << pole_pairs;
    throw std::invalid_argument(msg.str());
  }
}

double wrap_angle(double angle) {
  double w = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

double angle_diff(double a, double b) {
  const double d = a - b;
  return std::atan2(std::sin(d), std::cos(d));
}

double rpm_to_electrical(double rpm, int pole_pairs) {
  return rpm / 60.0 * 2.0 * kPi * pole_pairs;
}

Vec2 unit_vector(double theta) { return {std::cos(theta), std::sin(theta)}; }

Mat2 saliency_matrix(double theta) {
  const double c2 = std::cos(2.0 * theta);
  const double s2 = std::sin(2.0 * theta);
  Mat2 q;
  q << c2, s2, s2, -c2;
  return q;
}

// ---------------------------------------------------------------------------
// RotorTrajectory

RotorTrajectory::RotorTrajectory(double theta0) : theta0_(theta0) {}

RotorTrajectory RotorTrajectory::constant(double omega_e, double theta0) {
  RotorTrajectory traj(theta0);
  traj.start_speed(omega_e);
  return traj;
}

RotorTrajectory& RotorTrajectory::start_speed(double omega_e) {
  if (!segments_.empty()) {
    throw std::logic_error("start_speed must precede segments");
  }
  omega0_ = omega_e;
  return *this;
}

RotorTrajectory& RotorTrajectory::hold(double duration) {
  const double w = segments_.empty() ? omega0_ : segments_.back().omega_end;
  return ramp(duration, w);
}

RotorTrajectory& RotorTrajectory::ramp(double duration, double omega_end) {
  if (!(duration > 0.0)) throw std::invalid_argument("segment duration <= 0");
  Segment seg{};
  if (segments_.empty()) {
    seg.t_begin = 0.0;
    seg.omega_begin = omega0_;
    seg.theta_begin = theta0_;
  } else {
    const Segment& last = segments_.back();
    seg.t_begin = last.t_begin + last.duration;
    seg.omega_begin = last.omega_end;
    seg.theta_begin =
        last.theta_begin + 0.5 * (last.omega_begin + last.omega_end) * last.duration;
  }
  seg.duration = duration;
  seg.omega_end = omega_end;
  segments_.push_back(seg);
  return *this;
}

const RotorTrajectory::Segment* RotorTrajectory::find(double t) const {
  if (segments_.empty() || t < 0.0) return nullptr;
  for (const Segment& seg : segments_) {
    if (t < seg.t_begin + seg.duration) return &seg;
  }
  return nullptr;
}

double RotorTrajectory::end_time() const {
  if (segments_.empty()) return 0.0;
  return segments_.back().t_begin + segments_.back().duration;
}

double RotorTrajectory::theta(double t) const {
  if (const Segment* seg = find(t)) {
    const double tau = t - seg->t_begin;
    const double slope = (seg->omega_end - seg->omega_begin) / seg->duration;
    return seg->theta_begin + seg->omega_begin * tau + 0.5 * slope * tau * tau;
  }
  if (segments_.empty() || t < 0.0) return theta0_ + omega0_ * t;
  // Past the last segment the end speed is held.
  const Segment& last = segments_.back();
  const double t_end = last.t_begin + last.duration;
  const double theta_end =
      last.theta_begin + 0.5 * (last.omega_begin + last.omega_end) * last.duration;
  return theta_end + last.omega_end * (t - t_end);
}

double RotorTrajectory::omega(double t) const {
  if (const Segment* seg = find(t)) {
    const double tau = t - seg->t_begin;
    return seg->omega_begin +
           (seg->omega_end - seg->omega_begin) * tau / seg->duration;
  }
  if (segments_.empty() || t < 0.0) return omega0_;
  return segments_.back().omega_end;
}

double RotorTrajectory::acceleration(double t) const {
  if (const Segment* seg = find(t)) {
    return (seg->omega_end - seg->omega_begin) / seg->duration;
  }
  return 0.0;
}

double RotorTrajectory::mean_speed(double t_end) const {
  if (!(t_end > 0.0)) return omega(0.0);
  return (theta(t_end) - theta(0.0)) / t_end;
}

// ---------------------------------------------------------------------------
// Electrical maps

Mat2 inductance_matrix(double theta, const MotorParams& params) {
  return params.Ls() * Mat2::Identity() +
         0.5 * params.L0() * saliency_matrix(theta);
}

Vec2 current_from_flux(const Vec2& lambda, double theta,
                       const MotorParams& params) {
  // L(theta) = rot(theta) diag(Ld, Lq) rot(theta)^T, so the inverse is taken
  // in the rotor frame.
  const Vec2 c = unit_vector(theta);
  const Vec2 r = lambda - params.psi_m() * c;
  const double d = c.x() * r.x() + c.y() * r.y();
  const double q = -c.y() * r.x() + c.x() * r.y();
  return dq_to_alphabeta({d / params.Ld(), q / params.Lq()}, theta);
}

Vec2 flux_from_current(const Vec2& current, double theta,
                       const MotorParams& params) {
  return inductance_matrix(theta, params) * current +
         params.psi_m() * unit_vector(theta);
}

Vec2 active_flux(const Vec2& lambda, const Vec2& current,
                 const MotorParams& params) {
  return lambda - params.Lq() * current;
}

double angle_from_active_flux(const Vec2& x) {
  if (x.x() == 0.0 && x.y() == 0.0) throw DegenerateFluxError();
  return std::atan2(x.y(), x.x());
}

Vec2 dq_to_alphabeta(const Vec2& dq, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * dq.x() - s * dq.y(), s * dq.x() + c * dq.y()};
}

Vec2 reference_current(const RotorTrajectory& traj, const Vec2& i_dq_ref,
                       double t) {
  return dq_to_alphabeta(i_dq_ref, traj.theta(t));
}

Vec2 synth_feedforward_voltage(const RotorTrajectory& traj, const Vec2& i_dq_ref,
                               double t, const MotorParams& params) {
  // lambda* = rot(theta) (Ld id + psi_m, Lq iq); its derivative is
  // omega * J * lambda* with J the quarter-turn rotation.
  const double theta = traj.theta(t);
  const Vec2 flux_dq(params.Ld() * i_dq_ref.x() + params.psi_m(),
                     params.Lq() * i_dq_ref.y());
  const Vec2 flux = dq_to_alphabeta(flux_dq, theta);
  const Vec2 dflux = traj.omega(t) * Vec2(-flux.y(), flux.x());
  return dflux + params.R() * dq_to_alphabeta(i_dq_ref, theta);
}

// ---------------------------------------------------------------------------
// Integration

namespace {

void require_finite(const MotorState& s) {
  if (!s.lambda.allFinite() || !std::isfinite(s.t)) {
    std::ostringstream msg;
    msg << "motor state not finite at t=" << s.t;
    throw NumericalFault(msg.str());
  }
}

}  // namespace

MotorState step_motor(const MotorState& state, const VoltageFn& voltage,
                      const RotorTrajectory& traj, double dt,
                      const MotorParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_motor: dt <= 0");
  require_finite(state);
  auto deriv = [&](double t, const Vec2& lambda) -> Vec2 {
    const Vec2 i = current_from_flux(lambda, traj.theta(t), params);
    return voltage(t) - params.R() * i;
  };
  const double t = state.t;
  const Vec2 k1 = deriv(t, state.lambda);
  const Vec2 k2 = deriv(t + 0.5 * dt, state.lambda + 0.5 * dt * k1);
  const Vec2 k3 = deriv(t + 0.5 * dt, state.lambda + 0.5 * dt * k2);
  const Vec2 k4 = deriv(t + dt, state.lambda + dt * k3);
  MotorState next;
  next.lambda = state.lambda + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  next.t = t + dt;
  require_finite(next);
  return next;
}

MotorState step_motor(const MotorState& state, const Vec2& voltage,
                      const RotorTrajectory& traj, double dt,
                      const MotorParams& params) {
  return step_motor(
      state, [&voltage](double) { return voltage; }, traj, dt, params);
}

GroundTruthSample make_sample(const MotorState& state, const Vec2& voltage,
                              const RotorTrajectory& traj,
                              const MotorParams& params) {
  GroundTruthSample s;
  s.t = state.t;
  const double theta = traj.theta(state.t);
  s.theta = wrap_angle(theta);
  s.lambda = state.lambda;
  s.i = current_from_flux(state.lambda, theta, params);
  s.v = voltage;
  s.x = active_flux(s.lambda, s.i, params);
  return s;
}

}  // namespace fluxobs
