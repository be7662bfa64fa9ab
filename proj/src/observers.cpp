#include "fluxobs/observers.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fluxobs {

std::string to_string(ObserverKind kind) {
  switch (kind) {
    case ObserverKind::kKre:
      return "kre";
    case ObserverKind::kGradAut:
      return "grad_aut";
    case ObserverKind::kGradTie:
      return "grad_tie";
  }
  return "unknown";
}

ObserverKind observer_kind_from_string(const std::string& name) {
  if (name == "kre") return ObserverKind::kKre;
  if (name == "grad_aut") return ObserverKind::kGradAut;
  if (name == "grad_tie") return ObserverKind::kGradTie;
  throw std::invalid_argument("unknown observer '" + name + "'");
}

double estimate_angle(const Vec2& x_hat) {
  if (x_hat.x() == 0.0 && x_hat.y() == 0.0) return 0.0;
  return angle_from_active_flux(x_hat);
}

namespace {

void validate(const ObserverGains& gains, const ObserverNumerics& numerics) {
  if (!(gains.gamma > 0.0) || !(gains.a > 0.0) || !(gains.alpha > 0.0) ||
      !(gains.eps > 0.0)) {
    throw std::invalid_argument("observer gains must be positive");
  }
  if (!(numerics.dt > 0.0) || numerics.substeps < 1 || numerics.interp_order < 0) {
    throw std::invalid_argument("invalid observer numerics");
  }
}

[[noreturn]] void fault(const char* who, std::size_t step, double t) {
  std::ostringstream msg;
  msg << who << " state not finite at step " << step << " (t=" << t << ")";
  throw NumericalFault(msg.str());
}

// Classical RK4 over `substeps` equal substeps of one sample period, with the
// derivative evaluated on the half-substep grid.
template <class State, class Deriv>
State integrate_rk4(const State& s0, int substeps, double dt, Deriv&& deriv) {
  const double h = dt / substeps;
  State s = s0;
  for (int j = 0; j < substeps; ++j) {
    const std::size_t n0 = 2 * static_cast<std::size_t>(j);
    const State k1 = deriv(s, n0);
    const State k2 = deriv(s + (0.5 * h) * k1, n0 + 1);
    const State k3 = deriv(s + (0.5 * h) * k2, n0 + 1);
    const State k4 = deriv(s + h * k3, n0 + 2);
    s = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// MeasurementHistory

MeasurementHistory::MeasurementHistory(int interp_order, int substeps,
                                       double resistance)
    : order_(interp_order),
      substeps_(substeps),
      resistance_(resistance),
      i_(static_cast<std::size_t>(std::max(interp_order, 1)) + 1),
      drive_(i_.capacity()),
      phi_(i_.capacity()),
      y_(i_.capacity()) {
  const std::size_t grid = 2 * static_cast<std::size_t>(substeps) + 1;
  for (std::size_t count = 2; count <= i_.capacity(); ++count) {
    std::vector<std::vector<double>> table;
    table.reserve(grid);
    for (std::size_t n = 0; n < grid; ++n) {
      const double tau = -1.0 + static_cast<double>(n) / (2.0 * substeps);
      table.push_back(lagrange_basis(count, tau));
    }
    tables_.push_back(std::move(table));
  }
  if (order_ == 0) {
    // Zero-order hold on the sample at the start of the interval.
    std::vector<std::vector<double>> table(grid, std::vector<double>{0.0, 1.0});
    tables_.front() = std::move(table);
  }
}

void MeasurementHistory::push(const MeasurementSample& s) {
  i_.push(s.i);
  drive_.push(s.v - resistance_ * s.i);
  phi_.push(s.phi);
  y_.push(s.y);
  newest_ = s;
}

void MeasurementHistory::prime(const Vec2& i, const Vec2& v) {
  i_.push(i);
  drive_.push(v - resistance_ * i);
}

const std::vector<double>& MeasurementHistory::basis(std::size_t count,
                                                     std::size_t n) const {
  count = std::min(count, i_.capacity());
  return tables_[(order_ == 0 ? 2 : count) - 2][n];
}

const std::vector<double>& MeasurementHistory::plant_basis(std::size_t n) const {
  return basis(i_.size(), n);
}

const std::vector<double>& MeasurementHistory::regressor_basis(std::size_t n) const {
  return basis(phi_.size(), n);
}

// ---------------------------------------------------------------------------
// KRE

KreObserver::KreObserver(const MotorParams& params, const ObserverGains& gains,
                         const ObserverNumerics& numerics, const Vec2& lambda_hat0)
    : params_(params),
      gains_(gains),
      numerics_(numerics),
      history_(numerics.interp_order, numerics.substeps, params.R()),
      lambda_hat_(lambda_hat0) {
  validate(gains, numerics);
}

KreObserver::State KreObserver::derivative(const State& s, std::size_t n,
                                           const ManifoldTracker* tracker) const {
  const Vec2 i = history_.current(n);
  const Vec2 phi = history_.phi(n);
  const double y = history_.y(n);
  const double alpha = gains_.alpha;
  const double a = gains_.a;

  const Vec2 x_hat = s.lambda - params_.Lq() * i;
  const double m = i.dot(sigma(x_hat, gains_.eps));
  const double d_hat = -params_.ell() * alpha * (m - s.dz);
  const double e = phi.dot(x_hat) + d_hat - y;
  const Vec2 E = -gains_.gamma * s.y;

  State ds;
  ds.lambda = history_.drive(n) + E;
  ds.dz = alpha * (m - s.dz);
  ds.q = -a * (s.q - phi * phi.transpose());
  ds.y = -a * (s.y - phi * e);
  if (!numerics_.drop_qe_term) ds.y += s.q * E;
  if (tracker != nullptr) {
    const Vec2 x = tracker->x_true.combine(history_.plant_basis(n));
    ds.xi = -a * (s.xi - phi * (d_hat - (y - phi.dot(x))));
  } else {
    ds.xi = Vec2::Zero();
  }
  return ds;
}

ObserverOutput KreObserver::evaluate(const MeasurementSample& sample) const {
  ObserverOutput out;
  out.t = sample.t;
  out.x_hat = lambda_hat_ - params_.Lq() * sample.i;
  out.theta_hat = estimate_angle(out.x_hat);
  const double m = sample.i.dot(sigma(out.x_hat, gains_.eps));
  out.d_hat = -params_.ell() * gains_.alpha * (m - dz_);
  out.e = sample.phi.dot(out.x_hat) + out.d_hat - sample.y;
  out.E = -gains_.gamma * y_ext_;
  return out;
}

void KreObserver::prime(const Vec2& i, const Vec2& v, ManifoldTracker* tracker,
                        const Vec2& x_true) {
  history_.prime(i, v);
  if (tracker != nullptr) tracker->x_true.push(x_true);
}

ObserverOutput KreObserver::step(const MeasurementSample& sample,
                                 ManifoldTracker* tracker, const Vec2& x_true) {
  history_.push(sample);
  if (tracker != nullptr) tracker->x_true.push(x_true);
  if (steps_ > 0) {
    State s0{lambda_hat_, dz_, q_, y_ext_,
             tracker != nullptr ? tracker->xi : Vec2::Zero()};
    const State s1 = integrate_rk4(
        s0, numerics_.substeps, numerics_.dt,
        [&](const State& s, std::size_t n) { return derivative(s, n, tracker); });
    lambda_hat_ = s1.lambda;
    dz_ = s1.dz;
    q_ = s1.q;
    y_ext_ = s1.y;
    if (tracker != nullptr) tracker->xi = s1.xi;
    if (!lambda_hat_.allFinite() || !std::isfinite(dz_) || !q_.allFinite() ||
        !y_ext_.allFinite()) {
      fault("kre observer", steps_, sample.t);
    }
  }
  ++steps_;
  return evaluate(sample);
}

// ---------------------------------------------------------------------------
// Gradient observers

GradientObserver::GradientObserver(ObserverKind kind, const MotorParams& params,
                                   const ObserverGains& gains,
                                   const ObserverNumerics& numerics,
                                   const Vec2& lambda_hat0)
    : kind_(kind),
      params_(params),
      gains_(gains),
      numerics_(numerics),
      history_(numerics.interp_order, numerics.substeps, params.R()),
      lambda_hat_(lambda_hat0) {
  if (kind == ObserverKind::kKre) {
    throw std::invalid_argument("GradientObserver cannot run the KRE law");
  }
  validate(gains, numerics);
}

GradientObserver::State GradientObserver::derivative(const State& s,
                                                     std::size_t n) const {
  const Vec2 i = history_.current(n);
  const Vec2 phi = history_.phi(n);
  const double y = history_.y(n);
  const Vec2 x_hat = s.lambda - params_.Lq() * i;

  State ds;
  double residual = y - phi.dot(x_hat);
  if (kind_ == ObserverKind::kGradAut) {
    const double m = i.dot(sigma(x_hat, gains_.eps));
    residual -= -params_.ell() * gains_.alpha * (m - s.dz);
    ds.dz = gains_.alpha * (m - s.dz);
  } else {
    ds.dz = 0.0;
  }
  ds.lambda = history_.drive(n) + gains_.gamma * residual * phi;
  return ds;
}

ObserverOutput GradientObserver::evaluate(const MeasurementSample& sample) const {
  ObserverOutput out;
  out.t = sample.t;
  out.x_hat = lambda_hat_ - params_.Lq() * sample.i;
  out.theta_hat = estimate_angle(out.x_hat);
  if (kind_ == ObserverKind::kGradAut) {
    const double m = sample.i.dot(sigma(out.x_hat, gains_.eps));
    out.d_hat = -params_.ell() * gains_.alpha * (m - dz_);
  }
  out.e = sample.y - sample.phi.dot(out.x_hat) - out.d_hat;
  out.E = gains_.gamma * out.e * sample.phi;
  return out;
}

ObserverOutput GradientObserver::step(const MeasurementSample& sample) {
  history_.push(sample);
  if (steps_ > 0) {
    const State s1 = integrate_rk4(
        State{lambda_hat_, dz_}, numerics_.substeps, numerics_.dt,
        [&](const State& s, std::size_t n) { return derivative(s, n); });
    lambda_hat_ = s1.lambda;
    dz_ = s1.dz;
    if (!lambda_hat_.allFinite() || !std::isfinite(dz_)) {
      fault(to_string(kind_).c_str(), steps_, sample.t);
    }
  }
  ++steps_;
  return evaluate(sample);
}

}  // namespace fluxobs
