// Shared helpers for the unit tests: relative error with a floor, central
// finite differences against forward_augmented, and random model/point
// generators. The finite-difference ladder checks dx and dt from plain value
// samples and dxx from the implementation's own first-derivative samples.
//
// A central difference of step h carries roundoff noise of about
// eps * |f| / h in absolute terms, so entries much smaller than the sampled
// values cannot be resolved to a tight relative tolerance by any step size.
// Each comparison therefore uses a floor proportional to the sampled scale
// (bugs in a propagation rule show up at the scale of the quantity itself),
// and falls back to a Richardson-extrapolated estimate when the plain
// difference misses, which removes the h^2 truncation term.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "thermopinn/autodiff.hpp"
#include "thermopinn/params.hpp"

namespace thermopinn::testing {

inline double rel_err(double a, double b, double floor = 1e-9) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Error of `exact` against a plain central difference and its Richardson
// refinement, with a floor tied to the magnitude of the sampled function.
inline double fd_entry_err(double exact, double plain, double rich, double sample_scale) {
  const double floor = 1e-3 * std::max(1.0, sample_scale);
  return std::min(rel_err(exact, plain, floor), rel_err(exact, rich, floor));
}

struct FdCheck {
  double dx = 0, dt = 0, dxx = 0;  // relative errors vs central differences
  double worst() const { return std::max({dx, dt, dxx}); }
};

inline FdCheck fd_check_forward(const NetworkParams& net, double x, double t,
                                double h = 1e-5) {
  const DualState s = forward_augmented(net, x, t);
  const DualState xp = forward_augmented(net, x + h, t);
  const DualState xm = forward_augmented(net, x - h, t);
  const DualState xp2 = forward_augmented(net, x + h / 2, t);
  const DualState xm2 = forward_augmented(net, x - h / 2, t);
  const DualState tp = forward_augmented(net, x, t + h);
  const DualState tm = forward_augmented(net, x, t - h);
  const DualState tp2 = forward_augmented(net, x, t + h / 2);
  const DualState tm2 = forward_augmented(net, x, t - h / 2);

  auto richardson = [](double full, double half) { return (4 * half - full) / 3; };
  const double v_scale = std::max({std::abs(s.v), std::abs(xp.v), std::abs(xm.v),
                                   std::abs(tp.v), std::abs(tm.v)});
  const double dx_scale = std::max({std::abs(s.dx), std::abs(xp.dx), std::abs(xm.dx)});

  const double dx_full = (xp.v - xm.v) / (2 * h);
  const double dx_half = (xp2.v - xm2.v) / h;
  const double dt_full = (tp.v - tm.v) / (2 * h);
  const double dt_half = (tp2.v - tm2.v) / h;
  const double dxx_full = (xp.dx - xm.dx) / (2 * h);
  const double dxx_half = (xp2.dx - xm2.dx) / h;

  FdCheck c;
  c.dx = fd_entry_err(s.dx, dx_full, richardson(dx_full, dx_half), v_scale);
  c.dt = fd_entry_err(s.dt, dt_full, richardson(dt_full, dt_half), v_scale);
  c.dxx = fd_entry_err(s.dxx, dxx_full, richardson(dxx_full, dxx_half), dx_scale);
  return c;
}

// Directional derivative of <cot, output quadruple> along dir, compared
// against the reverse-mode gradient.
inline double fd_check_backward(const NetworkParams& net, double x, double t,
                                const DualState& cot, const std::array<double, kParamsPerNet>& dir,
                                double eps = 1e-5) {
  std::array<double, kParamsPerNet> grad{};
  backward_params(net, x, t, cot, grad.data());
  double analytic = 0;
  for (int i = 0; i < kParamsPerNet; ++i) analytic += grad[i] * dir[i];

  auto inner = [&](double e) {
    NetworkParams shifted = net;
    for (int i = 0; i < kParamsPerNet; ++i) shifted.p[i] += e * dir[i];
    const DualState s = forward_augmented(shifted, x, t);
    return cot.v * s.v + cot.dx * s.dx + cot.dt * s.dt + cot.dxx * s.dxx;
  };
  const double fp = inner(eps), fm = inner(-eps);
  const double full = (fp - fm) / (2 * eps);
  const double half = (inner(eps / 2) - inner(-eps / 2)) / eps;
  const double rich = (4 * half - full) / 3;
  return fd_entry_err(analytic, full, rich, std::max(std::abs(fp), std::abs(fm)));
}

inline NetworkParams random_net(std::mt19937_64& rng, double scale = 1.0,
                                double bias_std = 0.1) {
  std::normal_distribution<double> n(0.0, 1.0);
  NetworkParams net;
  for (int l = 0; l < kAffineLayers; ++l) {
    const double std_w = scale * std::sqrt(2.0 / kFanIn[l]);
    double* w = net.weights(l);
    for (int i = 0; i < kFanIn[l] * kFanOut[l]; ++i) w[i] = std_w * n(rng);
    double* b = net.biases(l);
    for (int i = 0; i < kFanOut[l]; ++i) b[i] = bias_std * n(rng);
  }
  return net;
}

inline Point random_point(std::mt19937_64& rng, double x_lo, double x_hi, double t_hi) {
  std::uniform_real_distribution<double> ux(x_lo, x_hi), ut(0.0, t_hi);
  return Point{ux(rng), ut(rng)};
}

inline DualState random_cotangent(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return DualState{n(rng), n(rng), n(rng), n(rng)};
}

}  // namespace thermopinn::testing
