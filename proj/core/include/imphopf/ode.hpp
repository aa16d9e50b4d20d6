#pragma once

// Dormand-Prince 5(4) stepper for planar autonomous systems, with FSAL,
// embedded error control and cubic Hermite dense output.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "imphopf/normalform.hpp"

namespace imphopf {

struct Tolerances {
  double rel = 1e-10;
  double abs = 1e-12;
};

/// Step size fell below the underflow threshold. Carries the last accepted
/// state.
class StiffnessFailure : public std::runtime_error {
 public:
  StiffnessFailure(double t, State last)
      : std::runtime_error("step size underflow at t = " + std::to_string(t)), t_(t), last_(last) {}
  double time() const { return t_; }
  State last_state() const { return last_; }

 private:
  double t_;
  State last_;
};

inline constexpr double kMinStep = 1e-14;

/// F is callable as State(State).
template <class F>
class DormandPrince {
 public:
  DormandPrince(F f, State y0, double t0, Tolerances tol, double h0 = 0.0)
      : f_(std::move(f)), tol_(tol), t_(t0), y_(y0) {
    if (!(tol.rel > 0.0) || !(tol.abs > 0.0)) throw std::invalid_argument("tolerances must be positive");
    k1_ = f_(y_);
    h_ = h0 > 0.0 ? h0 : initial_step();
    t_prev_ = t_;
    y_prev_ = y_;
    k_prev_ = k1_;
  }

  double t() const { return t_; }
  State y() const { return y_; }
  State dy() const { return k1_; }
  double t_prev() const { return t_prev_; }
  State y_prev() const { return y_prev_; }
  State dy_prev() const { return k_prev_; }
  double step_size() const { return h_; }
  void set_max_step(double h) { h_max_ = h; }

  /// Advances by one accepted step, not beyond t_limit.
  void step(double t_limit = INFINITY) {
    for (;;) {
      double h = std::min(h_, h_max_);
      bool clipped = false;
      if (t_ + h >= t_limit) {
        h = t_limit - t_;
        clipped = true;
      }
      if (h < kMinStep) throw StiffnessFailure(t_, y_);
      State y5, k7, err;
      trial(y_, k1_, h, y5, k7, err);
      const double e = error_norm(y_, y5, err);
      if (e <= 1.0 && std::isfinite(e)) {
        t_prev_ = t_;
        y_prev_ = y_;
        k_prev_ = k1_;
        t_ = clipped ? t_limit : t_ + h;
        y_ = y5;
        k1_ = k7;
        const double fac = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
        if (!clipped || fac < 1.0) h_ = h * fac;
        return;
      }
      const double fac = std::isfinite(e) ? std::clamp(0.9 * std::pow(e, -0.2), 0.1, 0.9) : 0.1;
      h_ = h * fac;
    }
  }

  /// Cubic Hermite interpolant on the last accepted step.
  State dense(double t) const {
    const double h = t_ - t_prev_;
    if (h == 0.0) return y_;
    const double s = (t - t_prev_) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    return h00 * y_prev_ + (h10 * h) * k_prev_ + h01 * y_ + (h11 * h) * k1_;
  }

  /// A single uncontrolled fifth-order step of size h from the start of the
  /// last accepted step; used to refine interpolated event locations.
  State step_from_prev(double h) const {
    State y5, k7, err;
    trial(y_prev_, k_prev_, h, y5, k7, err);
    return y5;
  }

  /// Restarts the stepper at a new state (keeps the step size).
  void reset(State y, double t) {
    t_ = t;
    y_ = y;
    k1_ = f_(y_);
    t_prev_ = t_;
    y_prev_ = y_;
    k_prev_ = k1_;
  }

  const F& field() const { return f_; }

 private:
  void trial(State y, State k1, double h, State& y5, State& k7, State& err) const {
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                            a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                            a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                            b6 = 11.0 / 84.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
    const State k2 = f_(y + (h * a21) * k1);
    const State k3 = f_(y + h * (a31 * k1 + a32 * k2));
    const State k4 = f_(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const State k5 = f_(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const State k6 = f_(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = f_(y5);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  }

  double error_norm(State y0, State y1, State err) const {
    const double sx = tol_.abs + tol_.rel * std::max(std::abs(y0.x), std::abs(y1.x));
    const double sy = tol_.abs + tol_.rel * std::max(std::abs(y0.y), std::abs(y1.y));
    const double ex = err.x / sx;
    const double ey = err.y / sy;
    return std::sqrt(0.5 * (ex * ex + ey * ey));
  }

  double initial_step() const {
    const double sx = tol_.abs + tol_.rel * std::abs(y_.x);
    const double sy = tol_.abs + tol_.rel * std::abs(y_.y);
    const double d0 = std::hypot(y_.x / sx, y_.y / sy);
    const double d1 = std::hypot(k1_.x / sx, k1_.y / sy);
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::clamp(h, 1e-8, 0.1);
    return h;
  }

  F f_;
  Tolerances tol_;
  double t_ = 0.0;
  State y_;
  State k1_;
  double h_ = 0.0;
  double h_max_ = INFINITY;
  double t_prev_ = 0.0;
  State y_prev_;
  State k_prev_;
};

}  // namespace imphopf
