#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fluxobs/motor_model.hpp"

using namespace fluxobs;

namespace {

MotorParams paper() { return MotorParams(2.5, 0.00782, 0.00782, 0.10, 4); }
MotorParams salient() { return MotorParams(2.5, 0.00782, 0.0120, 0.10, 4); }

}  // namespace

TEST(MotorParams, DerivedQuantities) {
  const MotorParams p = salient();
  EXPECT_EQ(p.L0(), 0.00782 - 0.0120);
  EXPECT_EQ(p.Ls(), 0.5 * (0.00782 + 0.0120));
  EXPECT_EQ(p.ell(), 0.10 * (0.00782 - 0.0120));
}

TEST(MotorParams, RejectsNonPhysical) {
  EXPECT_THROW(MotorParams(0.0, 1e-3, 1e-3, 0.1, 4), std::invalid_argument);
  EXPECT_THROW(MotorParams(1.0, -1e-3, 1e-3, 0.1, 4), std::invalid_argument);
  EXPECT_THROW(MotorParams(1.0, 1e-3, 0.0, 0.1, 4), std::invalid_argument);
  EXPECT_THROW(MotorParams(1.0, 1e-3, 1e-3, 0.0, 4), std::invalid_argument);
  EXPECT_THROW(MotorParams(1.0, 1e-3, 1e-3, 0.1, 0), std::invalid_argument);
}

TEST(Angles, WrapAndDiff) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3.0 * kPi + 0.1), -kPi + 0.1, 1e-12);
  EXPECT_NEAR(angle_diff(kPi - 0.01, -kPi + 0.01), -0.02, 1e-12);
  for (double a = -20.0; a < 20.0; a += 0.37) {
    const double w = wrap_angle(a);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_NEAR(std::cos(w), std::cos(a), 1e-12);
    EXPECT_NEAR(std::sin(w), std::sin(a), 1e-12);
  }
}

TEST(Angles, RpmConversion) {
  // 1000 rpm, 4 pole pairs: 1000/60 * 2 pi * 4.
  EXPECT_NEAR(rpm_to_electrical(1000.0, 4), 418.879020478639, 1e-9);
}

TEST(InductanceMatrix, DiagonalAtZero) {
  const Mat2 L = inductance_matrix(0.0, salient());
  EXPECT_NEAR(L(0, 0), 0.00782, 1e-15);
  EXPECT_NEAR(L(1, 1), 0.0120, 1e-15);
  EXPECT_NEAR(L(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(L(1, 0), 0.0, 1e-15);
}

TEST(InductanceMatrix, QuarterTurn) {
  const Mat2 L = inductance_matrix(kPi / 4.0, salient());
  EXPECT_NEAR(L(0, 0), 0.00991, 1e-15);
  EXPECT_NEAR(L(1, 1), 0.00991, 1e-15);
  EXPECT_NEAR(L(0, 1), -0.00209, 1e-15);
  EXPECT_NEAR(L(1, 0), -0.00209, 1e-15);
}

TEST(InductanceMatrix, IsotropicForPaperMachine) {
  for (double th : {0.0, 0.3, 1.9, -2.7}) {
    const Mat2 L = inductance_matrix(th, paper());
    EXPECT_NEAR((L - 0.00782 * Mat2::Identity()).norm(), 0.0, 1e-17);
  }
}

TEST(InductanceMatrix, EigenvaluesAreLdLq) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  const MotorParams p = salient();
  for (int k = 0; k < 100; ++k) {
    const Mat2 L = inductance_matrix(angle(rng), p);
    EXPECT_NEAR(L(0, 1), L(1, 0), 1e-18);
    // Independent oracle: Eigen's symmetric solver, ascending.
    Eigen::SelfAdjointEigenSolver<Mat2> es(L);
    EXPECT_NEAR(es.eigenvalues()(0), p.Ld(), 1e-12);
    EXPECT_NEAR(es.eigenvalues()(1), p.Lq(), 1e-12);
  }
}

TEST(CurrentFromFlux, ZeroCurrentFlux) {
  const MotorParams p = salient();
  for (double th : {0.0, 1.0, -2.0}) {
    const Vec2 i = current_from_flux(p.psi_m() * unit_vector(th), th, p);
    EXPECT_NEAR(i.norm(), 0.0, 1e-15);
  }
}

TEST(CurrentFromFlux, DiagonalCase) {
  const MotorParams p = salient();
  const Vec2 lambda(p.psi_m() + p.Ld() * 1.0, p.Lq() * 2.0);
  const Vec2 i = current_from_flux(lambda, 0.0, p);
  EXPECT_NEAR(i.x(), 1.0, 1e-12);
  EXPECT_NEAR(i.y(), 2.0, 1e-12);
}

TEST(FluxFromCurrent, Examples) {
  const MotorParams p = salient();
  const Vec2 a = flux_from_current(Vec2::Zero(), kPi / 2.0, p);
  EXPECT_NEAR(a.x(), 0.0, 1e-16);
  EXPECT_NEAR(a.y(), p.psi_m(), 1e-16);
  const Vec2 b = flux_from_current(Vec2(1.0, 0.0), 0.0, p);
  EXPECT_NEAR(b.x(), p.psi_m() + p.Ld(), 1e-16);
  EXPECT_NEAR(b.y(), 0.0, 1e-16);
}

TEST(FluxFromCurrent, RoundTrip) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> amp(-10.0, 10.0);
  for (const MotorParams& p : {paper(), salient()}) {
    for (int k = 0; k < 200; ++k) {
      const double th = angle(rng);
      const Vec2 i(amp(rng), amp(rng));
      const Vec2 back = current_from_flux(flux_from_current(i, th, p), th, p);
      EXPECT_NEAR((back - i).norm(), 0.0, 1e-12);
    }
  }
}

TEST(ActiveFlux, Arithmetic) {
  const Vec2 x = active_flux(Vec2(1.0, 2.0), Vec2(0.5, 0.5), salient());
  EXPECT_NEAR(x.x(), 0.994, 1e-15);
  EXPECT_NEAR(x.y(), 1.994, 1e-15);
  EXPECT_EQ(active_flux(Vec2(0.3, -0.2), Vec2::Zero(), salient()), Vec2(0.3, -0.2));
}

TEST(ActiveFlux, CollinearWithRotor) {
  // x = (psi + L0 i_d) c(theta), checked by direct substitution.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> amp(-5.0, 5.0);
  const MotorParams p = salient();
  for (int k = 0; k < 200; ++k) {
    const double th = angle(rng);
    const Vec2 i(amp(rng), amp(rng));
    const Vec2 lambda = flux_from_current(i, th, p);
    const Vec2 x = active_flux(lambda, i, p);
    const double i_d = std::cos(th) * i.x() + std::sin(th) * i.y();
    const double scale = p.psi_m() + p.L0() * i_d;
    EXPECT_NEAR(x.x(), scale * std::cos(th), 1e-10);
    EXPECT_NEAR(x.y(), scale * std::sin(th), 1e-10);
    ASSERT_GT(scale, 0.0);
    EXPECT_LT(std::abs(angle_diff(angle_from_active_flux(x), th)), 1e-9);
  }
}

TEST(AngleFromActiveFlux, Examples) {
  EXPECT_DOUBLE_EQ(angle_from_active_flux(Vec2(0.0, 0.1)), kPi / 2.0);
  EXPECT_DOUBLE_EQ(angle_from_active_flux(Vec2(-0.1, 0.0)), kPi);
  EXPECT_THROW(angle_from_active_flux(Vec2::Zero()), DegenerateFluxError);
}

TEST(RotorTrajectory, ThetaIsIntegralOfOmega) {
  RotorTrajectory traj = RotorTrajectory::constant(100.0, 0.2);
  traj.hold(0.1).ramp(0.2, 300.0).hold(0.1);
  // Trapezoid on a fine grid of the speed profile.
  double theta = 0.2;
  const double h = 1e-6;
  for (double t = 0.0; t < 0.5 - h / 2; t += h) {
    theta += 0.5 * h * (traj.omega(t) + traj.omega(t + h));
  }
  EXPECT_NEAR(traj.theta(0.5), theta, 1e-7);
  EXPECT_DOUBLE_EQ(traj.omega(0.2), 200.0);
  EXPECT_DOUBLE_EQ(traj.acceleration(0.2), 1000.0);
  EXPECT_DOUBLE_EQ(traj.omega(1.0), 300.0);
}

TEST(Feedforward, StaticIsZero) {
  const RotorTrajectory traj = RotorTrajectory::constant(0.0, 0.4);
  const Vec2 v = synth_feedforward_voltage(traj, Vec2::Zero(), 0.3, salient());
  EXPECT_EQ(v, Vec2::Zero());
}

TEST(Feedforward, NoCurrentIsBackEmf) {
  const double w = rpm_to_electrical(1000.0, 4);
  const RotorTrajectory traj = RotorTrajectory::constant(w, 0.3);
  const MotorParams p = salient();
  for (double t : {0.0, 0.0123, 0.5}) {
    const double th = traj.theta(t);
    const Vec2 v = synth_feedforward_voltage(traj, Vec2::Zero(), t, p);
    EXPECT_NEAR(v.x(), -p.psi_m() * w * std::sin(th), 1e-12);
    EXPECT_NEAR(v.y(), p.psi_m() * w * std::cos(th), 1e-12);
  }
}

TEST(StepMotor, EquilibriumWhenVoltageBalancesResistance) {
  const MotorParams p = salient();
  const RotorTrajectory traj = RotorTrajectory::constant(0.0, 0.7);
  MotorState s;
  s.lambda = flux_from_current(Vec2(1.5, -0.5), 0.7, p);
  const Vec2 i = current_from_flux(s.lambda, 0.7, p);
  const Vec2 start = s.lambda;
  for (int k = 0; k < 1000; ++k) s = step_motor(s, Vec2(p.R() * i), traj, 1e-5, p);
  EXPECT_NEAR((s.lambda - start).norm(), 0.0, 1e-15);
}

TEST(StepMotor, FeedforwardTracksReference) {
  const MotorParams p = salient();
  const RotorTrajectory traj = RotorTrajectory::constant(rpm_to_electrical(1000.0, 4), 0.1);
  const Vec2 i_dq(-1.0, 2.0);
  const VoltageFn v = [&](double t) { return synth_feedforward_voltage(traj, i_dq, t, p); };
  MotorState s;
  s.lambda = flux_from_current(reference_current(traj, i_dq, 0.0), traj.theta(0.0), p);
  double worst_i = 0.0, worst_lambda = 0.0;
  const double dt = 1e-5;
  for (int k = 1; k <= 100000; ++k) {
    s = step_motor(s, v, traj, dt, p);
    s.t = k * dt;
    const Vec2 i_ref = reference_current(traj, i_dq, s.t);
    const Vec2 lambda_ref = flux_from_current(i_ref, traj.theta(s.t), p);
    const Vec2 i = current_from_flux(s.lambda, traj.theta(s.t), p);
    worst_i = std::max(worst_i, (i - i_ref).norm());
    worst_lambda = std::max(worst_lambda, (s.lambda - lambda_ref).norm());
  }
  EXPECT_LT(worst_i, 1e-6);
  EXPECT_LT(worst_lambda, 1e-8);
}

namespace {

// Endpoint after `duration` seconds driven by a voltage off the feedforward,
// so the current responds with its own transient.
Vec2 endpoint(double dt, double duration) {
  const MotorParams p = salient();
  const RotorTrajectory traj = RotorTrajectory::constant(300.0, 0.0);
  const VoltageFn v = [](double t) { return Vec2(20.0 * std::cos(250.0 * t), 5.0); };
  MotorState s;
  s.lambda = Vec2(0.05, -0.02);
  const int n = static_cast<int>(std::llround(duration / dt));
  for (int k = 1; k <= n; ++k) {
    s = step_motor(s, v, traj, dt, p);
    s.t = k * dt;
  }
  return s.lambda;
}

}  // namespace

TEST(StepMotor, FourthOrderConvergence) {
  const double T = 0.05;
  const Vec2 a = endpoint(4e-4, T);
  const Vec2 b = endpoint(2e-4, T);
  const Vec2 c = endpoint(1e-4, T);
  const double order = std::log2((a - b).norm() / (b - c).norm());
  EXPECT_GE(order, 3.8) << "observed order " << order;
}

TEST(StepMotor, NonFiniteStateFaults) {
  const MotorParams p = salient();
  const RotorTrajectory traj = RotorTrajectory::constant(100.0);
  MotorState s;
  s.lambda = Vec2(std::nan(""), 0.0);
  EXPECT_THROW(step_motor(s, Vec2(Vec2::Zero()), traj, 1e-5, p), NumericalFault);
}

TEST(MakeSample, Consistency) {
  const MotorParams p = salient();
  const RotorTrajectory traj = RotorTrajectory::constant(400.0, 3.0);
  MotorState s;
  s.t = 0.01;
  s.lambda = flux_from_current(Vec2(0.3, 1.2), traj.theta(0.01), p);
  const GroundTruthSample g = make_sample(s, Vec2(1.0, 2.0), traj, p);
  EXPECT_EQ(g.x, g.lambda - p.Lq() * g.i);
  EXPECT_GT(g.theta, -kPi);
  EXPECT_LE(g.theta, kPi);
  EXPECT_NEAR(angle_diff(g.theta, traj.theta(0.01)), 0.0, 1e-12);
}
