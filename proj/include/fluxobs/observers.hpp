#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fluxobs/lti_filters.hpp"
#include "fluxobs/motor_model.hpp"
#include "fluxobs/regressor_pipeline.hpp"

namespace fluxobs {

enum class ObserverKind { kKre, kGradAut, kGradTie };

std::string to_string(ObserverKind kind);
ObserverKind observer_kind_from_string(const std::string& name);

struct ObserverGains {
  double gamma = 1.0;
  double a = 20.0 * kPi;    // KRE forgetting rate
  double alpha = 200.0 * kPi;
  double eps = 0.01;        // sigma threshold (Wb)
};

struct ObserverNumerics {
  double dt = 1e-4;
  /// Lagrange order used to reconstruct measurements between samples.
  int interp_order = 5;
  /// RK4 substeps per sample period.
  int substeps = 8;
  /// Mutation switch: drops Q E from the Y dynamics.
  bool drop_qe_term = false;
};

/// Everything an observer consumes at one sample instant.
struct MeasurementSample {
  double t = 0.0;
  Vec2 i = Vec2::Zero();
  Vec2 v = Vec2::Zero();
  Vec2 phi = Vec2::Zero();
  double y = 0.0;
};

struct ObserverOutput {
  double t = 0.0;
  Vec2 x_hat = Vec2::Zero();
  double theta_hat = 0.0;
  Vec2 E = Vec2::Zero();
  /// KRE: e = Phi^T x_hat + d_hat - y. Gradient: y - Phi^T x_hat - d_hat.
  double e = 0.0;
  double d_hat = 0.0;
};

/// theta_hat from x_hat; zero when x_hat vanishes.
double estimate_angle(const Vec2& x_hat);

/// Auxiliary state xi' = -a (xi - Phi d_tilde) carried through the same
/// integrator stages as the KRE state. d_tilde = d_hat - (y - Phi^T x) uses the
/// true active flux x, so the filter start-up residual counts as disturbance.
struct ManifoldTracker {
  explicit ManifoldTracker(Vec2 xi0 = Vec2::Zero(), std::size_t capacity = 16)
      : xi(std::move(xi0)), x_true(capacity) {}

  Vec2 xi;
  SampleHistory<Vec2> x_true;
};

/// Measurement reconstruction shared by the observers: samples are kept in
/// short histories and evaluated at integrator stage times by Lagrange
/// interpolation through the newest samples.
class MeasurementHistory {
 public:
  MeasurementHistory(int interp_order, int substeps, double resistance);

  void push(const MeasurementSample& s);
  /// Motor samples from before the observer starts; only i and v exist there.
  void prime(const Vec2& i, const Vec2& v);
  std::size_t size() const { return phi_.size(); }

  /// Basis at half-substep grid point n in [0, 2*substeps] for the interval
  /// ending at the newest sample. Motor signals and regressor signals keep
  /// separate stencils since only the former may reach before t = 0.
  const std::vector<double>& plant_basis(std::size_t n) const;
  const std::vector<double>& regressor_basis(std::size_t n) const;

  Vec2 current(std::size_t n) const { return i_.combine(plant_basis(n)); }
  Vec2 drive(std::size_t n) const { return drive_.combine(plant_basis(n)); }
  Vec2 phi(std::size_t n) const { return phi_.combine(regressor_basis(n)); }
  double y(std::size_t n) const { return y_.combine(regressor_basis(n)); }

  const MeasurementSample& newest() const { return newest_; }
  int substeps() const { return substeps_; }

 private:
  const std::vector<double>& basis(std::size_t count, std::size_t n) const;

  int order_;
  int substeps_;
  double resistance_;
  SampleHistory<Vec2> i_;
  SampleHistory<Vec2> drive_;  // v - R i
  SampleHistory<Vec2> phi_;
  SampleHistory<double> y_;
  MeasurementSample newest_;
  // tables_[count - 2][n]
  std::vector<std::vector<std::vector<double>>> tables_;
};

/// Kreisselmeier-regression-extension flux observer:
///   Q' = -a (Q - Phi Phi^T),  Y' = -a (Y - Phi e) + Q E,  E = -gamma Y,
///   lambda_hat' = v - R i + E,  x_hat = lambda_hat - Lq i,
/// with e = Phi^T x_hat + d_hat - y and d_hat = -ell H1[i^T sigma(x_hat)].
class KreObserver {
 public:
  KreObserver(const MotorParams& params, const ObserverGains& gains,
              const ObserverNumerics& numerics, const Vec2& lambda_hat0);

  /// Feeds motor history from before the first sample (oldest first).
  void prime(const Vec2& i, const Vec2& v, ManifoldTracker* tracker = nullptr,
             const Vec2& x_true = Vec2::Zero());

  /// Advances to the sample instant and returns the estimate there. The first
  /// call only latches the sample. When `tracker` is given, `x_true` is the
  /// true active flux at this sample.
  ObserverOutput step(const MeasurementSample& sample,
                      ManifoldTracker* tracker = nullptr,
                      const Vec2& x_true = Vec2::Zero());

  const Vec2& lambda_hat() const { return lambda_hat_; }
  const Mat2& Q() const { return q_; }
  const Vec2& Y() const { return y_ext_; }
  std::size_t steps() const { return steps_; }
  const ObserverGains& gains() const { return gains_; }

 private:
  struct State {
    Vec2 lambda;
    double dz;
    Mat2 q;
    Vec2 y;
    Vec2 xi;

    friend State operator+(const State& l, const State& r) {
      return {l.lambda + r.lambda, l.dz + r.dz, l.q + r.q, l.y + r.y, l.xi + r.xi};
    }
    friend State operator*(double k, const State& s) {
      return {k * s.lambda, k * s.dz, k * s.q, k * s.y, k * s.xi};
    }
  };
  State derivative(const State& s, std::size_t n,
                   const ManifoldTracker* tracker) const;
  ObserverOutput evaluate(const MeasurementSample& sample) const;

  MotorParams params_;
  ObserverGains gains_;
  ObserverNumerics numerics_;
  MeasurementHistory history_;
  Vec2 lambda_hat_;
  double dz_ = 0.0;  // H2 substate of the d_hat high-pass
  Mat2 q_ = Mat2::Zero();
  Vec2 y_ext_ = Vec2::Zero();
  std::size_t steps_ = 0;
};

/// Gradient flux observers. kGradAut: E = gamma Phi (y - Phi^T x_hat - d_hat);
/// kGradTie: E = gamma Phi (y - Phi^T x_hat).
class GradientObserver {
 public:
  GradientObserver(ObserverKind kind, const MotorParams& params,
                   const ObserverGains& gains, const ObserverNumerics& numerics,
                   const Vec2& lambda_hat0);

  void prime(const Vec2& i, const Vec2& v) { history_.prime(i, v); }
  ObserverOutput step(const MeasurementSample& sample);

  const Vec2& lambda_hat() const { return lambda_hat_; }
  ObserverKind kind() const { return kind_; }
  std::size_t steps() const { return steps_; }

 private:
  struct State {
    Vec2 lambda;
    double dz;

    friend State operator+(const State& l, const State& r) {
      return {l.lambda + r.lambda, l.dz + r.dz};
    }
    friend State operator*(double k, const State& s) {
      return {k * s.lambda, k * s.dz};
    }
  };
  State derivative(const State& s, std::size_t n) const;
  ObserverOutput evaluate(const MeasurementSample& sample) const;

  ObserverKind kind_;
  MotorParams params_;
  ObserverGains gains_;
  ObserverNumerics numerics_;
  MeasurementHistory history_;
  Vec2 lambda_hat_;
  double dz_ = 0.0;
  std::size_t steps_ = 0;
};

}  // namespace fluxobs
