#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <memory>
#include <type_traits>
#include <utility>
#include <vector>

#include "fluxobs/motor_model.hpp"

namespace fluxobs {

template <class T>
T zero_value() {
  if constexpr (std::is_arithmetic_v<T>) {
    return T{0};
  } else {
    return T::Zero();
  }
}

/// Lagrange basis values at `tau` for the nodes 0, -1, ..., -(count-1).
/// Nodes are in units of the sample period, newest sample first.
std::vector<double> lagrange_basis(std::size_t count, double tau);

/// Most recent samples of a uniformly sampled signal, newest first.
template <class T>
class SampleHistory {
 public:
  explicit SampleHistory(std::size_t capacity) : capacity_(capacity) {}

  void push(const T& value) {
    samples_.push_front(value);
    if (samples_.size() > capacity_) samples_.pop_back();
  }

  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  const T& operator[](std::size_t age) const { return samples_[age]; }
  void clear() { samples_.clear(); }

  /// Value at tau (in sample periods, tau <= 0 relative to the newest sample)
  /// from the interpolating polynomial through the first `count` samples.
  T at(double tau, std::size_t count) const {
    const std::vector<double> basis = lagrange_basis(count, tau);
    return combine(basis);
  }

  T combine(const std::vector<double>& basis) const {
    T acc = zero_value<T>();
    for (std::size_t j = 0; j < basis.size(); ++j) acc += basis[j] * samples_[j];
    return acc;
  }

 private:
  std::size_t capacity_;
  std::deque<T> samples_;
};

/// Quadrature weights of the first-order lag alpha/(p+alpha) over one sample
/// period, for inputs reconstructed by Lagrange interpolation of order 0..max.
/// With order 0 the input is held at the newest sample and the update reduces
/// to z' = a z + (1 - a) u with a = exp(-alpha dt).
class LagWeights {
 public:
  LagWeights(double alpha, double dt, int max_order);

  double alpha() const { return alpha_; }
  double dt() const { return dt_; }
  double decay() const { return decay_; }
  int max_order() const { return static_cast<int>(weights_.size()) - 1; }
  const std::vector<double>& weights(int order) const { return weights_[order]; }

 private:
  double alpha_;
  double dt_;
  double decay_;
  std::vector<std::vector<double>> weights_;
};

/// H2(p) = alpha/(p + alpha), integrated exactly for the reconstructed input.
template <class T>
class LowPassFilter {
 public:
  LowPassFilter(std::shared_ptr<const LagWeights> weights,
                T initial = zero_value<T>())
      : weights_(std::move(weights)),
        history_(static_cast<std::size_t>(weights_->max_order()) + 1),
        z_(initial) {}

  LowPassFilter(double alpha, double dt, int order = 0,
                T initial = zero_value<T>())
      : LowPassFilter(std::make_shared<const LagWeights>(alpha, dt, order),
                      initial) {}

  /// Advances one sample period ending at this input sample.
  const T& step(const T& u) {
    history_.push(u);
    const int order =
        std::min<int>(weights_->max_order(), static_cast<int>(history_.size()) - 1);
    z_ = weights_->decay() * z_ + history_.combine(weights_->weights(order));
    return z_;
  }

  const T& output() const { return z_; }
  void reset(const T& z) {
    z_ = z;
    history_.clear();
  }
  double alpha() const { return weights_->alpha(); }
  double dt() const { return weights_->dt(); }
  double decay() const { return weights_->decay(); }

 private:
  std::shared_ptr<const LagWeights> weights_;
  SampleHistory<T> history_;
  T z_;
};

/// H1(p) = alpha p/(p + alpha), realized as alpha (u - H2[u]).
template <class T>
class HighPassFilter {
 public:
  explicit HighPassFilter(std::shared_ptr<const LagWeights> weights)
      : low_(std::move(weights)), y_(zero_value<T>()) {}

  HighPassFilter(double alpha, double dt, int order = 0)
      : low_(alpha, dt, order), y_(zero_value<T>()) {}

  const T& step(const T& u) {
    low_.step(u);
    y_ = low_.alpha() * (u - low_.output());
    return y_;
  }

  const T& output() const { return y_; }
  const LowPassFilter<T>& low_pass() const { return low_; }

 private:
  LowPassFilter<T> low_;
  T y_;
};

/// Free functions mirroring the filter update on a bare state.
struct LowPassState {
  double z = 0.0;
  double alpha = 0.0;
  double dt = 0.0;
  double decay = 0.0;

  static LowPassState make(double alpha, double dt, double z0 = 0.0);
};

/// Zero-order-hold update: returns the new state; its output is z.
LowPassState h2_step(const LowPassState& state, double u);

/// Returns alpha (u - z') together with the advanced low-pass state.
std::pair<LowPassState, double> h1_step(const LowPassState& state, double u);

}  // namespace fluxobs
