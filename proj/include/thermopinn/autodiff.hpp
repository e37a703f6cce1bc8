// Derivative engine for the fixed architecture. The forward pass propagates
// (value, d/dx, d/dt, d2/dx2) together through every layer; the reverse pass
// takes a cotangent on that output quadruple and accumulates the parameter
// gradient. Two implementations share the same arithmetic: a scalar
// reference used for testing and as a baseline, and a lane-batched kernel
// that the compiler vectorizes, parallelized over fixed-size point blocks so
// reductions are bit-identical for any thread count.
#pragma once

#include <span>
#include <vector>

#include "thermopinn/params.hpp"
#include "thermopinn/physics.hpp"

namespace thermopinn {

enum class EvalMode { Serial, Parallel };

const char* eval_mode_name(EvalMode mode);

struct Point {
  double x = 0;  // network input units (mm when scaled, m when raw)
  double t = 0;  // seconds
};

// Output quadruple of one network at one point.
DualState forward_augmented(const NetworkParams& net, double x, double t);

// Accumulates d<cot, output-quadruple>/dparams into grad[kParamsPerNet].
void backward_params(const NetworkParams& net, double x, double t, const DualState& cot,
                     double* grad);

// One fused pass over a residual family: returns sum over points of r^2
// where r = c0 + sum of per-slot weighted outputs. If grad is non-null, also
// accumulates grad_scale * sum r * dr/dparams into it (pass 2*k^2/N to get
// the gradient of the k^2-weighted mean-square loss). The parallel mode
// reduces per-block partials in index order, so results do not depend on the
// OpenMP thread count.
double accumulate_term(const ParallelModel& model, const TermCoeffs& coeffs,
                       std::span<const Point> pts, double grad_scale, EvalMode mode,
                       ModelGradient* grad);

}  // namespace thermopinn
