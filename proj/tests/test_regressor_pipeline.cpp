#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fluxobs/analysis.hpp"
#include "fluxobs/regressor_pipeline.hpp"

using namespace fluxobs;

namespace {

constexpr double kAlpha = 200.0 * kPi;

MotorParams paper() { return MotorParams(2.5, 0.00782, 0.00782, 0.10, 4); }
MotorParams salient() { return MotorParams(2.5, 0.00782, 0.0120, 0.10, 4); }

struct Truth {
  std::vector<double> t;
  std::vector<Vec2> i, v, x;
};

// Feedforward-driven motor at 1000 rpm sampled at 10 kHz.
Truth simulate(const MotorParams& p, const Vec2& i_dq, double duration) {
  const RotorTrajectory traj = RotorTrajectory::constant(rpm_to_electrical(1000.0, 4), 0.3);
  const VoltageFn volt = [&](double t) { return synth_feedforward_voltage(traj, i_dq, t, p); };
  MotorState s;
  s.lambda = flux_from_current(reference_current(traj, i_dq, 0.0), traj.theta(0.0), p);
  Truth out;
  const double dt = 1e-4;
  const int n = static_cast<int>(std::llround(duration / dt));
  for (int k = 0; k <= n; ++k) {
    if (k > 0) {
      for (int j = 0; j < 10; ++j) s = step_motor(s, volt, traj, dt / 10.0, p);
      s.t = k * dt;
    }
    const GroundTruthSample g = make_sample(s, volt(s.t), traj, p);
    out.t.push_back(g.t);
    out.i.push_back(g.i);
    out.v.push_back(g.v);
    out.x.push_back(g.x);
  }
  return out;
}

struct Residual {
  std::vector<double> r, t;
  double max_y = 0.0;
};

Residual regression_residual(const MotorParams& p, const Truth& truth, bool drop_lq = false) {
  RegressorOptions opt;
  opt.alpha = kAlpha;
  opt.drop_lq_term = drop_lq;
  RegressorPipeline pipe(p, opt);
  Residual out;
  for (std::size_t k = 0; k < truth.t.size(); ++k) {
    const RegressorSample s = pipe.step(truth.i[k], truth.v[k]);
    const double d = pipe.true_disturbance(truth.i[k], truth.x[k]);
    out.r.push_back(std::abs(s.y - s.phi.dot(truth.x[k]) - d));
    out.t.push_back(truth.t[k]);
    out.max_y = std::max(out.max_y, std::abs(s.y));
  }
  return out;
}

}  // namespace

TEST(Sigma, Examples) {
  const Vec2 a = sigma(Vec2(0.3, 0.4), 0.01);
  EXPECT_NEAR(a.x(), 0.6, 1e-15);
  EXPECT_NEAR(a.y(), 0.8, 1e-15);
  EXPECT_EQ(sigma(Vec2(0.005, 0.0), 0.01), Vec2::Zero());
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  for (int k = 0; k < 1000; ++k) {
    const double n = sigma(Vec2(dist(rng), dist(rng)), 0.02).norm();
    EXPECT_TRUE(n == 0.0 || std::abs(n - 1.0) < 1e-15);
  }
}

TEST(RegressorPipeline, ZeroInputsGiveZeroOutputs) {
  RegressorPipeline pipe(salient(), RegressorOptions{});
  for (int k = 0; k < 50; ++k) {
    const RegressorSample s = pipe.step(Vec2::Zero(), Vec2::Zero());
    EXPECT_EQ(s.omega1, Vec2::Zero());
    EXPECT_EQ(s.omega2, Vec2::Zero());
    EXPECT_EQ(s.phi, Vec2::Zero());
    EXPECT_EQ(s.y, 0.0);
  }
}

TEST(RegressorPipeline, NonSalientSubstitution) {
  // L0 = 0: Omega2 == Omega1, Phi == 2 Omega1, y == |Omega1|^2/alpha + H2[|Omega1|^2]/alpha.
  const MotorParams p = paper();
  const Truth truth = simulate(p, Vec2(0.0, 2.0), 0.02);
  RegressorOptions opt;
  RegressorPipeline pipe(p, opt);
  LowPassFilter<double> h2(opt.alpha, opt.dt, opt.interp_order);
  for (std::size_t k = 0; k < truth.t.size(); ++k) {
    const RegressorSample s = pipe.step(truth.i[k], truth.v[k]);
    EXPECT_EQ(s.omega2, s.omega1);
    EXPECT_EQ(s.phi, 2.0 * s.omega1);
    const double sq = s.omega1.squaredNorm();
    const double expected = sq / opt.alpha + h2.step(sq) / opt.alpha;
    EXPECT_NEAR(s.y, expected, 1e-14 * (1.0 + std::abs(expected)));
  }
}

TEST(RegressorPipeline, PhiIsSumOfOmegas) {
  const MotorParams p = salient();
  const Truth truth = simulate(p, Vec2(-1.0, 1.0), 0.01);
  RegressorPipeline pipe(p, RegressorOptions{});
  for (std::size_t k = 0; k < truth.t.size(); ++k) {
    const RegressorSample s = pipe.step(truth.i[k], truth.v[k]);
    EXPECT_EQ(s.phi, s.omega1 + s.omega2);
  }
}

TEST(RegressorPipeline, RegressionIdentityHoldsOnSalientMachine) {
  const Truth truth = simulate(salient(), Vec2(0.0, 0.5), 0.3);
  const Residual res = regression_residual(salient(), truth);
  double worst = 0.0;
  for (std::size_t k = 0; k < res.t.size(); ++k) {
    if (res.t[k] > 10.0 / kAlpha) worst = std::max(worst, res.r[k]);
  }
  EXPECT_LT(worst, 1e-6 * res.max_y);
  // Start-up residual decays at the filter bandwidth.
  const RateFit fit = fit_rate(res.r, res.t, 0.0, 5.0 / kAlpha);
  EXPECT_NEAR(fit.rate / kAlpha, 1.0, 0.2);
}

TEST(RegressorPipeline, ResidualBoundedByExponential) {
  // |r(t)| <= C e^{-alpha t} + floor, with C from the first sample.
  const Truth truth = simulate(salient(), Vec2(0.0, 2.0), 0.05);
  const Residual res = regression_residual(salient(), truth);
  const double c = 1.5 * res.r.front();
  for (std::size_t k = 0; k < res.t.size(); ++k) {
    EXPECT_LE(res.r[k], c * std::exp(-kAlpha * res.t[k]) + 1e-8) << "t = " << res.t[k];
  }
}

TEST(RegressorPipeline, MutationBreaksIdentity) {
  const Truth truth = simulate(salient(), Vec2(0.0, 0.5), 0.1);
  const Residual res = regression_residual(salient(), truth, true);
  double worst = 0.0;
  for (std::size_t k = 0; k < res.t.size(); ++k) {
    if (res.t[k] > 10.0 / kAlpha) worst = std::max(worst, res.r[k]);
  }
  EXPECT_GT(worst, 1e-2 * res.max_y);
}

TEST(Disturbance, ZeroForNonSalientMachine) {
  RegressorPipeline pipe(paper(), RegressorOptions{});
  for (int k = 0; k < 20; ++k) {
    EXPECT_EQ(pipe.disturbance_estimate(Vec2(1.0, 2.0 * k), Vec2(0.1, 0.02), 0.01), 0.0);
  }
}

TEST(Disturbance, ConstantInputDecays) {
  RegressorPipeline pipe(salient(), RegressorOptions{});
  double d = 0.0;
  for (int k = 0; k < 1000; ++k) d = pipe.disturbance_estimate(Vec2(1.0, 0.0), Vec2(0.1, 0.0), 0.01);
  EXPECT_NEAR(d, 0.0, 1e-12);
}

TEST(Disturbance, EstimateEqualsTruthWhenFluxIsExact) {
  const Truth truth = simulate(salient(), Vec2(-1.0, 2.0), 0.02);
  RegressorPipeline pipe(salient(), RegressorOptions{});
  for (std::size_t k = 0; k < truth.t.size(); ++k) {
    const double est = pipe.disturbance_estimate(truth.i[k], truth.x[k], 0.01);
    const double tru = pipe.true_disturbance(truth.i[k], truth.x[k]);
    EXPECT_NEAR(est, tru, 1e-12);
  }
}

TEST(Disturbance, TrueDisturbanceRejectsZeroFlux) {
  RegressorPipeline pipe(salient(), RegressorOptions{});
  EXPECT_THROW(pipe.true_disturbance(Vec2(1.0, 0.0), Vec2::Zero()), DegenerateFluxError);
}
