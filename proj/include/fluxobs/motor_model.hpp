#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fluxobs {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

constexpr double kPi = 3.14159265358979323846;

/// Raised when an angle is requested from a zero flux vector.
class DegenerateFluxError : public std::domain_error {
 public:
  DegenerateFluxError() : std::domain_error("degenerate flux: |x| == 0") {}
};

/// Raised when a state stops being finite.
class NumericalFault : public std::runtime_error {
 public:
  explicit NumericalFault(const std::string& what) : std::runtime_error(what) {}
};

/// Electrical constants of an IPMSM. The inductance difference, averaged
/// inductance and the coupling ell = psi_m * L0 are derived on construction.
class MotorParams {
 public:
  MotorParams(double resistance, double l_d, double l_q, double psi_m,
              int pole_pairs);

  double R() const { return r_; }
  double Ld() const { return l_d_; }
  double Lq() const { return l_q_; }
  double psi_m() const { return psi_m_; }
  int pole_pairs() const { return pole_pairs_; }

  double L0() const { return l_d_ - l_q_; }
  double Ls() const { return 0.5 * (l_d_ + l_q_); }
  double ell() const { return psi_m_ * L0(); }

 private:
  double r_;
  double l_d_;
  double l_q_;
  double psi_m_;
  int pole_pairs_;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

/// Wrapped difference a - b, computed as atan2(sin, cos).
double angle_diff(double a, double b);

/// Electrical speed in rad/s from mechanical rpm.
double rpm_to_electrical(double rpm, int pole_pairs);

/// (cos theta, sin theta).
Vec2 unit_vector(double theta);

/// Saliency map [[cos 2t, sin 2t], [sin 2t, -cos 2t]].
Mat2 saliency_matrix(double theta);

/// Prescribed rotor motion as a sequence of constant-speed and linear-ramp
/// segments. The angle is the exact integral of the speed within each segment.
class RotorTrajectory {
 public:
  struct Segment {
    double t_begin;
    double duration;
    double omega_begin;
    double omega_end;
    double theta_begin;
  };

  explicit RotorTrajectory(double theta0 = 0.0);

  static RotorTrajectory constant(double omega_e, double theta0 = 0.0);

  /// Appends a segment holding the current end speed for `duration` seconds.
  RotorTrajectory& hold(double duration);
  /// Appends a ramp from the current end speed to `omega_end`.
  RotorTrajectory& ramp(double duration, double omega_end);
  /// Sets the speed used before any segment is appended.
  RotorTrajectory& start_speed(double omega_e);

  /// Unwrapped electrical angle.
  double theta(double t) const;
  double omega(double t) const;
  /// d(omega)/dt.
  double acceleration(double t) const;

  double end_time() const;
  double mean_speed(double t_end) const;

 private:
  const Segment* find(double t) const;

  double theta0_;
  double omega0_ = 0.0;
  std::vector<Segment> segments_;
};

/// L(theta) = Ls*I + (L0/2)*Q(theta).
Mat2 inductance_matrix(double theta, const MotorParams& params);

/// i = L(theta)^{-1} (lambda - psi_m c(theta)).
Vec2 current_from_flux(const Vec2& lambda, double theta,
                       const MotorParams& params);

/// lambda = L(theta) i + psi_m c(theta).
Vec2 flux_from_current(const Vec2& current, double theta,
                       const MotorParams& params);

/// x = lambda - Lq i.
Vec2 active_flux(const Vec2& lambda, const Vec2& current,
                 const MotorParams& params);

/// atan2(x2, x1); throws DegenerateFluxError for x == 0.
double angle_from_active_flux(const Vec2& x);

/// Rotates a dq vector into the stationary frame.
Vec2 dq_to_alphabeta(const Vec2& dq, double theta);

/// Reference current in the stationary frame at time t.
Vec2 reference_current(const RotorTrajectory& traj, const Vec2& i_dq_ref,
                       double t);

/// Voltage v = d(lambda*)/dt + R i* that keeps the motor on the constant dq
/// current reference. The flux derivative is taken analytically.
Vec2 synth_feedforward_voltage(const RotorTrajectory& traj, const Vec2& i_dq_ref,
                               double t, const MotorParams& params);

struct MotorState {
  Vec2 lambda = Vec2::Zero();
  double t = 0.0;
};

struct GroundTruthSample {
  double t = 0.0;
  double theta = 0.0;  // wrapped
  Vec2 lambda = Vec2::Zero();
  Vec2 i = Vec2::Zero();
  Vec2 v = Vec2::Zero();
  Vec2 x = Vec2::Zero();
};

using VoltageFn = std::function<Vec2(double)>;

/// One RK4 step of lambda' = v - R i. The current is recomputed from
/// (lambda, theta(t)) at every stage; v is evaluated at the stage times.
MotorState step_motor(const MotorState& state, const VoltageFn& voltage,
                      const RotorTrajectory& traj, double dt,
                      const MotorParams& params);

/// Same step with the voltage held over the interval.
MotorState step_motor(const MotorState& state, const Vec2& voltage,
                      const RotorTrajectory& traj, double dt,
                      const MotorParams& params);

GroundTruthSample make_sample(const MotorState& state, const Vec2& voltage,
                              const RotorTrajectory& traj,
                              const MotorParams& params);

}  // namespace fluxobs
