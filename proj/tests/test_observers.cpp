#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fluxobs/analysis.hpp"
#include "fluxobs/observers.hpp"

using namespace fluxobs;

namespace {

MotorParams paper() { return MotorParams(2.5, 0.00782, 0.00782, 0.10, 4); }

MeasurementSample sample_at(double t, const Vec2& phi, double y,
                            const Vec2& i = Vec2::Zero(), const Vec2& v = Vec2::Zero()) {
  MeasurementSample s;
  s.t = t;
  s.i = i;
  s.v = v;
  s.phi = phi;
  s.y = y;
  return s;
}

}  // namespace

TEST(ObserverKind, Names) {
  for (ObserverKind k : {ObserverKind::kKre, ObserverKind::kGradAut, ObserverKind::kGradTie}) {
    EXPECT_EQ(observer_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(observer_kind_from_string("luenberger"), std::invalid_argument);
}

TEST(KreObserver, StartsOpenLoop) {
  // Q(0) = Y(0) = 0: E(0) = 0, and with a tiny gain the flux estimate is the
  // open-loop integral of v - R i.
  ObserverGains g;
  g.gamma = 1e-12;
  ObserverNumerics n;
  const Vec2 lambda0(0.05, -0.02);
  KreObserver obs(paper(), g, n, lambda0);
  const Vec2 v(3.0, -1.0), i(0.4, 0.2);
  const ObserverOutput first = obs.step(sample_at(0.0, Vec2(1.0, 2.0), 0.3, i, v));
  EXPECT_EQ(first.E, Vec2::Zero());
  EXPECT_EQ(obs.Q(), Mat2::Zero());
  EXPECT_EQ(obs.Y(), Vec2::Zero());
  for (int k = 1; k <= 10; ++k) obs.step(sample_at(k * n.dt, Vec2(1.0, 2.0), 0.3, i, v));
  const Vec2 expected = lambda0 + 10 * n.dt * (v - paper().R() * i);
  EXPECT_NEAR((obs.lambda_hat() - expected).norm(), 0.0, 1e-12);
}

TEST(KreObserver, ConstantRegressorClosedForm) {
  // Phi = Phi0, i = v = 0, y = Phi0^T lambda_hat0: e = 0 so E = 0 and
  // Q(t) = (1 - e^{-a t}) Phi0 Phi0^T.
  ObserverGains g;
  ObserverNumerics n;
  n.dt = 1.0 / g.a / 100.0;
  const Vec2 phi0(0.7, -1.3);
  const Vec2 lambda0(0.08, 0.06);
  const double y0 = phi0.dot(lambda0);
  KreObserver obs(paper(), g, n, lambda0);
  const Mat2 outer = phi0 * phi0.transpose();
  for (int k = 0; k <= 500; ++k) {
    obs.step(sample_at(k * n.dt, phi0, y0));
    if (k == 100 || k == 500) {
      const double t = k * n.dt;
      const Mat2 expected = (1.0 - std::exp(-g.a * t)) * outer;
      EXPECT_NEAR((obs.Q() - expected).cwiseAbs().maxCoeff(), 0.0, 1e-10) << "t = " << t;
      EXPECT_NEAR(min_eigenvalue(obs.Q()), 0.0, 1e-10);
    }
  }
  EXPECT_NEAR((obs.lambda_hat() - lambda0).norm(), 0.0, 1e-15);
}

TEST(KreObserver, QStaysSymmetricAndBounded) {
  ObserverGains g;
  ObserverNumerics n;
  KreObserver obs(paper(), g, n, Vec2(0.1, 0.0));
  const double w = 418.879;
  double phi_sup = 0.0;
  double worst_asym = 0.0, worst_low = 0.0, worst_high = 0.0;
  for (int k = 0; k < 1000000; ++k) {
    const double t = k * n.dt;
    const Vec2 phi = 3.0 * Vec2(std::cos(w * t), std::sin(w * t)) + Vec2(0.5, 0.0);
    phi_sup = std::max(phi_sup, phi.norm());
    obs.step(sample_at(t, phi, 0.0));
    const Mat2& q = obs.Q();
    worst_asym = std::max(worst_asym, std::abs(q(0, 1) - q(1, 0)));
    const auto [lo, hi] = sym2_eigenvalues(q);
    worst_low = std::min(worst_low, lo);
    worst_high = std::max(worst_high, hi - phi_sup * phi_sup);
  }
  EXPECT_LE(worst_asym, 1e-12);
  EXPECT_GE(worst_low, -1e-12);
  EXPECT_LE(worst_high, 1e-12);
}

TEST(KreObserver, AngleComesFromActiveFlux) {
  KreObserver obs(paper(), ObserverGains{}, ObserverNumerics{}, Vec2(0.1, 0.05));
  for (int k = 0; k < 50; ++k) {
    const ObserverOutput out =
        obs.step(sample_at(k * 1e-4, Vec2(std::cos(0.04 * k), std::sin(0.04 * k)), 0.01,
                           Vec2(0.3, 0.1), Vec2(1.0, 2.0)));
    EXPECT_EQ(out.theta_hat, angle_from_active_flux(out.x_hat));
  }
}

TEST(KreObserver, DroppingQeChangesY) {
  ObserverNumerics with, without;
  without.drop_qe_term = true;
  KreObserver a(paper(), ObserverGains{}, with, Vec2(0.1, 0.0));
  KreObserver b(paper(), ObserverGains{}, without, Vec2(0.1, 0.0));
  for (int k = 0; k < 20; ++k) {
    const MeasurementSample s = sample_at(k * 1e-4, Vec2(1.0, 0.5), 0.2);
    a.step(s);
    b.step(s);
  }
  EXPECT_GT((a.Y() - b.Y()).norm(), 1e-9);
}

TEST(KreObserver, NonFiniteStateFaults) {
  KreObserver obs(paper(), ObserverGains{}, ObserverNumerics{}, Vec2(0.1, 0.0));
  obs.step(sample_at(0.0, Vec2(1.0, 0.0), 0.0));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    obs.step(sample_at(1e-4, Vec2(nan, 0.0), 0.0));
    FAIL() << "expected NumericalFault";
  } catch (const NumericalFault& f) {
    EXPECT_NE(std::string(f.what()).find("step 1"), std::string::npos) << f.what();
  }
}

TEST(KreObserver, RejectsBadGains) {
  ObserverGains g;
  g.gamma = 0.0;
  EXPECT_THROW(KreObserver(paper(), g, ObserverNumerics{}, Vec2::Zero()), std::invalid_argument);
  ObserverNumerics n;
  n.substeps = 0;
  EXPECT_THROW(KreObserver(paper(), ObserverGains{}, n, Vec2::Zero()), std::invalid_argument);
}

TEST(GradientObserver, StationaryWhenRegressionHolds) {
  const Vec2 lambda0(0.07, -0.03);
  const Vec2 phi0(1.5, 0.4);
  for (ObserverKind kind : {ObserverKind::kGradAut, ObserverKind::kGradTie}) {
    GradientObserver obs(kind, paper(), ObserverGains{}, ObserverNumerics{}, lambda0);
    for (int k = 0; k < 20; ++k) {
      const ObserverOutput out = obs.step(sample_at(k * 1e-4, phi0, phi0.dot(lambda0)));
      EXPECT_EQ(out.E, Vec2::Zero());
    }
    EXPECT_EQ(obs.lambda_hat(), lambda0);
  }
}

TEST(GradientObserver, AutEqualsTieWithoutSaliency) {
  GradientObserver aut(ObserverKind::kGradAut, paper(), ObserverGains{}, ObserverNumerics{},
                       Vec2(0.0, 0.2));
  GradientObserver tie(ObserverKind::kGradTie, paper(), ObserverGains{}, ObserverNumerics{},
                       Vec2(0.0, 0.2));
  for (int k = 0; k < 200; ++k) {
    const double t = k * 1e-4;
    const MeasurementSample s =
        sample_at(t, Vec2(std::cos(400 * t), std::sin(400 * t)), 0.05 * std::cos(400 * t),
                  Vec2(0.5 * std::cos(400 * t), 0.5 * std::sin(400 * t)), Vec2(1.0, -2.0));
    const ObserverOutput a = aut.step(s);
    const ObserverOutput b = tie.step(s);
    EXPECT_EQ(a.E, b.E);
    EXPECT_EQ(a.x_hat, b.x_hat);
  }
}

TEST(GradientObserver, RejectsKreKind) {
  EXPECT_THROW(GradientObserver(ObserverKind::kKre, paper(), ObserverGains{},
                                ObserverNumerics{}, Vec2::Zero()),
               std::invalid_argument);
}

TEST(EstimateAngle, ZeroFluxGivesZero) {
  EXPECT_EQ(estimate_angle(Vec2::Zero()), 0.0);
  EXPECT_DOUBLE_EQ(estimate_angle(Vec2(0.0, 1.0)), kPi / 2.0);
}
