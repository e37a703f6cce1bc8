#include "thermopinn/autodiff.hpp"

#include <cstdint>
#include <cstring>
#include <stdexcept>

#include "thermopinn/fastmath.hpp"

namespace thermopinn {

const char* eval_mode_name(EvalMode mode) {
  return mode == EvalMode::Serial ? "serial" : "parallel";
}

namespace {

constexpr int kW = kHiddenWidth;

// ---------------------------------------------------------------- scalar --

struct ScalarTape {
  double a[kHiddenLayers][kW];
  double zx[kHiddenLayers][kW];
  double zt[kHiddenLayers][kW];
  double zxx[kHiddenLayers][kW];
};

DualState forward_scalar(const NetworkParams& net, double x, double t, ScalarTape* tape) {
  double v[kW], vx[kW], vt[kW], vxx[kW];
  {
    const double* W = net.weights(0);
    const double* B = net.biases(0);
    for (int i = 0; i < kW; ++i) {
      const double w0 = W[2 * i], w1 = W[2 * i + 1];
      const double z = w0 * x + w1 * t + B[i];
      const double a = fast_tanh(z);
      const double u = 1.0 - a * a;
      if (tape) {
        tape->a[0][i] = a;
        tape->zx[0][i] = w0;
        tape->zt[0][i] = w1;
        tape->zxx[0][i] = 0.0;
      }
      v[i] = a;
      vx[i] = u * w0;
      vt[i] = u * w1;
      vxx[i] = -2.0 * a * u * w0 * w0;
    }
  }
  for (int h = 1; h < kHiddenLayers; ++h) {
    const double* W = net.weights(h);
    const double* B = net.biases(h);
    double z[kW], zx[kW], zt[kW], zxx[kW];
    for (int i = 0; i < kW; ++i) {
      double sv = B[i], sx = 0, st = 0, sxx = 0;
      for (int j = 0; j < kW; ++j) {
        const double w = W[i * kW + j];
        sv += w * v[j];
        sx += w * vx[j];
        st += w * vt[j];
        sxx += w * vxx[j];
      }
      z[i] = sv;
      zx[i] = sx;
      zt[i] = st;
      zxx[i] = sxx;
    }
    for (int i = 0; i < kW; ++i) {
      const double a = fast_tanh(z[i]);
      const double u = 1.0 - a * a;
      if (tape) {
        tape->a[h][i] = a;
        tape->zx[h][i] = zx[i];
        tape->zt[h][i] = zt[i];
        tape->zxx[h][i] = zxx[i];
      }
      v[i] = a;
      vx[i] = u * zx[i];
      vt[i] = u * zt[i];
      vxx[i] = u * zxx[i] - 2.0 * a * u * zx[i] * zx[i];
    }
  }
  const double* W = net.weights(kHiddenLayers);
  DualState out;
  out.v = net.biases(kHiddenLayers)[0];
  for (int j = 0; j < kW; ++j) {
    const double w = W[j];
    out.v += w * v[j];
    out.dx += w * vx[j];
    out.dt += w * vt[j];
    out.dxx += w * vxx[j];
  }
  return out;
}

// Rebuilds the post-activation state of hidden layer h from the tape.
void scalar_state(const ScalarTape& tp, int h, double* p, double* px, double* pt, double* pxx) {
  for (int i = 0; i < kW; ++i) {
    const double a = tp.a[h][i];
    const double u = 1.0 - a * a;
    const double zx = tp.zx[h][i];
    p[i] = a;
    px[i] = u * zx;
    pt[i] = u * tp.zt[h][i];
    pxx[i] = u * tp.zxx[h][i] - 2.0 * a * u * zx * zx;
  }
}

void backward_scalar(const NetworkParams& net, double x, double t, const ScalarTape& tp,
                     const DualState& cot, double* grad) {
  double ga[kW], gax[kW], gat[kW], gaxx[kW];
  double p[kW], px[kW], pt[kW], pxx[kW];

  scalar_state(tp, kHiddenLayers - 1, p, px, pt, pxx);
  {
    const double* W = net.weights(kHiddenLayers);
    double* gW = grad + kWeightOffset[kHiddenLayers];
    for (int j = 0; j < kW; ++j) {
      gW[j] += cot.v * p[j] + cot.dx * px[j] + cot.dt * pt[j] + cot.dxx * pxx[j];
      ga[j] = W[j] * cot.v;
      gax[j] = W[j] * cot.dx;
      gat[j] = W[j] * cot.dt;
      gaxx[j] = W[j] * cot.dxx;
    }
    gW[kW] += cot.v;  // output bias sits right after the 10 weights
  }

  for (int h = kHiddenLayers - 1; h >= 0; --h) {
    double gz[kW], gzx[kW], gzt[kW], gzxx[kW];
    for (int i = 0; i < kW; ++i) {
      const double a = tp.a[h][i];
      const double u = 1.0 - a * a;
      const double zx = tp.zx[h][i];
      const double zt = tp.zt[h][i];
      const double zxx = tp.zxx[h][i];
      const double m2au = -2.0 * a * u;
      gz[i] = u * ga[i] + m2au * (zx * gax[i] + zt * gat[i] + zxx * gaxx[i]) -
              2.0 * u * (u - 2.0 * a * a) * zx * zx * gaxx[i];
      gzx[i] = u * gax[i] + 2.0 * m2au * zx * gaxx[i];
      gzt[i] = u * gat[i];
      gzxx[i] = u * gaxx[i];
    }
    double* gW = grad + kWeightOffset[h];
    if (h == 0) {
      double* gB = grad + kWeightOffset[0] + kInputDim * kW;
      for (int i = 0; i < kW; ++i) {
        gW[2 * i] += gz[i] * x + gzx[i];
        gW[2 * i + 1] += gz[i] * t + gzt[i];
        gB[i] += gz[i];
      }
      break;
    }
    scalar_state(tp, h - 1, p, px, pt, pxx);
    const double* W = net.weights(h);
    double* gB = grad + kWeightOffset[h] + kW * kW;
    for (int i = 0; i < kW; ++i) {
      for (int j = 0; j < kW; ++j) {
        gW[i * kW + j] += gz[i] * p[j] + gzx[i] * px[j] + gzt[i] * pt[j] + gzxx[i] * pxx[j];
      }
      gB[i] += gz[i];
    }
    double na[kW], nax[kW], nat[kW], naxx[kW];
    for (int j = 0; j < kW; ++j) {
      double sa = 0, sx = 0, st = 0, sxx = 0;
      for (int i = 0; i < kW; ++i) {
        const double w = W[i * kW + j];
        sa += w * gz[i];
        sx += w * gzx[i];
        st += w * gzt[i];
        sxx += w * gzxx[i];
      }
      na[j] = sa;
      nax[j] = sx;
      nat[j] = st;
      naxx[j] = sxx;
    }
    std::memcpy(ga, na, sizeof na);
    std::memcpy(gax, nax, sizeof nax);
    std::memcpy(gat, nat, sizeof nat);
    std::memcpy(gaxx, naxx, sizeof naxx);
  }
}

// --------------------------------------------------------------- batched --

constexpr int kLanes = 8;
constexpr int kBlockGroups = 64;
constexpr int kBlockPoints = kLanes * kBlockGroups;

struct LaneTape {
  alignas(64) double a[kHiddenLayers][kW][kLanes];
  alignas(64) double zx[kHiddenLayers][kW][kLanes];
  alignas(64) double zt[kHiddenLayers][kW][kLanes];
  alignas(64) double zxx[kHiddenLayers][kW][kLanes];
  alignas(64) double x[kLanes];
  alignas(64) double t[kLanes];
  alignas(64) double y[kLanes];
  alignas(64) double yx[kLanes];
  alignas(64) double yt[kLanes];
  alignas(64) double yxx[kLanes];
};

struct LaneState {
  alignas(64) double v[kW][kLanes];
  alignas(64) double vx[kW][kLanes];
  alignas(64) double vt[kW][kLanes];
  alignas(64) double vxx[kW][kLanes];
};

void lane_state_from_tape(const LaneTape& tp, int h, LaneState& s) {
  for (int i = 0; i < kW; ++i) {
    for (int l = 0; l < kLanes; ++l) {
      const double a = tp.a[h][i][l];
      const double u = 1.0 - a * a;
      const double zx = tp.zx[h][i][l];
      s.v[i][l] = a;
      s.vx[i][l] = u * zx;
      s.vt[i][l] = u * tp.zt[h][i][l];
      s.vxx[i][l] = u * tp.zxx[h][i][l] - 2.0 * a * u * zx * zx;
    }
  }
}

void forward_group(const NetworkParams& net, LaneTape& tp) {
  LaneState s;
  {
    const double* W = net.weights(0);
    const double* B = net.biases(0);
    for (int i = 0; i < kW; ++i) {
      const double w0 = W[2 * i], w1 = W[2 * i + 1], b = B[i];
      for (int l = 0; l < kLanes; ++l) {
        const double z = w0 * tp.x[l] + w1 * tp.t[l] + b;
        const double a = fast_tanh(z);
        const double u = 1.0 - a * a;
        tp.a[0][i][l] = a;
        tp.zx[0][i][l] = w0;
        tp.zt[0][i][l] = w1;
        tp.zxx[0][i][l] = 0.0;
        s.v[i][l] = a;
        s.vx[i][l] = u * w0;
        s.vt[i][l] = u * w1;
        s.vxx[i][l] = -2.0 * a * u * w0 * w0;
      }
    }
  }
  for (int h = 1; h < kHiddenLayers; ++h) {
    const double* W = net.weights(h);
    const double* B = net.biases(h);
    alignas(64) double nz[kW][kLanes], nzx[kW][kLanes], nzt[kW][kLanes], nzxx[kW][kLanes];
    for (int i = 0; i < kW; ++i) {
      alignas(64) double av[kLanes], ax[kLanes], at[kLanes], axx[kLanes];
      for (int l = 0; l < kLanes; ++l) {
        av[l] = B[i];
        ax[l] = 0;
        at[l] = 0;
        axx[l] = 0;
      }
      for (int j = 0; j < kW; ++j) {
        const double w = W[i * kW + j];
        for (int l = 0; l < kLanes; ++l) av[l] += w * s.v[j][l];
        for (int l = 0; l < kLanes; ++l) ax[l] += w * s.vx[j][l];
        for (int l = 0; l < kLanes; ++l) at[l] += w * s.vt[j][l];
        for (int l = 0; l < kLanes; ++l) axx[l] += w * s.vxx[j][l];
      }
      for (int l = 0; l < kLanes; ++l) {
        nz[i][l] = av[l];
        nzx[i][l] = ax[l];
        nzt[i][l] = at[l];
        nzxx[i][l] = axx[l];
      }
    }
    for (int i = 0; i < kW; ++i) {
      for (int l = 0; l < kLanes; ++l) {
        const double a = fast_tanh(nz[i][l]);
        const double u = 1.0 - a * a;
        tp.a[h][i][l] = a;
        tp.zx[h][i][l] = nzx[i][l];
        tp.zt[h][i][l] = nzt[i][l];
        tp.zxx[h][i][l] = nzxx[i][l];
        s.v[i][l] = a;
        s.vx[i][l] = u * nzx[i][l];
        s.vt[i][l] = u * nzt[i][l];
        s.vxx[i][l] = u * nzxx[i][l] - 2.0 * a * u * nzx[i][l] * nzx[i][l];
      }
    }
  }
  const double* W = net.weights(kHiddenLayers);
  const double b = net.biases(kHiddenLayers)[0];
  for (int l = 0; l < kLanes; ++l) {
    tp.y[l] = b;
    tp.yx[l] = 0;
    tp.yt[l] = 0;
    tp.yxx[l] = 0;
  }
  for (int j = 0; j < kW; ++j) {
    const double w = W[j];
    for (int l = 0; l < kLanes; ++l) {
      tp.y[l] += w * s.v[j][l];
      tp.yx[l] += w * s.vx[j][l];
      tp.yt[l] += w * s.vt[j][l];
      tp.yxx[l] += w * s.vxx[j][l];
    }
  }
}

// Accumulates into gl[param][lane]; lanes are collapsed once per block.
void reverse_group(const NetworkParams& net, const LaneTape& tp, const double* gy,
                   const double* gyx, const double* gyt, const double* gyxx, double* gl) {
  alignas(64) double ga[kW][kLanes], gax[kW][kLanes], gat[kW][kLanes], gaxx[kW][kLanes];
  LaneState s;

  lane_state_from_tape(tp, kHiddenLayers - 1, s);
  {
    const double* W = net.weights(kHiddenLayers);
    double* gW = gl + kWeightOffset[kHiddenLayers] * kLanes;
    for (int j = 0; j < kW; ++j) {
      const double w = W[j];
      for (int l = 0; l < kLanes; ++l) {
        gW[j * kLanes + l] +=
            gy[l] * s.v[j][l] + gyx[l] * s.vx[j][l] + gyt[l] * s.vt[j][l] + gyxx[l] * s.vxx[j][l];
        ga[j][l] = w * gy[l];
        gax[j][l] = w * gyx[l];
        gat[j][l] = w * gyt[l];
        gaxx[j][l] = w * gyxx[l];
      }
    }
    for (int l = 0; l < kLanes; ++l) gW[kW * kLanes + l] += gy[l];
  }

  for (int h = kHiddenLayers - 1; h >= 0; --h) {
    alignas(64) double gz[kW][kLanes], gzx[kW][kLanes], gzt[kW][kLanes], gzxx[kW][kLanes];
    for (int i = 0; i < kW; ++i) {
      for (int l = 0; l < kLanes; ++l) {
        const double a = tp.a[h][i][l];
        const double u = 1.0 - a * a;
        const double zx = tp.zx[h][i][l];
        const double zt = tp.zt[h][i][l];
        const double zxx = tp.zxx[h][i][l];
        const double m2au = -2.0 * a * u;
        gz[i][l] = u * ga[i][l] + m2au * (zx * gax[i][l] + zt * gat[i][l] + zxx * gaxx[i][l]) -
                   2.0 * u * (u - 2.0 * a * a) * zx * zx * gaxx[i][l];
        gzx[i][l] = u * gax[i][l] + 2.0 * m2au * zx * gaxx[i][l];
        gzt[i][l] = u * gat[i][l];
        gzxx[i][l] = u * gaxx[i][l];
      }
    }
    double* gW = gl + kWeightOffset[h] * kLanes;
    if (h == 0) {
      double* gB = gl + (kWeightOffset[0] + kInputDim * kW) * kLanes;
      for (int i = 0; i < kW; ++i) {
        for (int l = 0; l < kLanes; ++l) {
          gW[(2 * i) * kLanes + l] += gz[i][l] * tp.x[l] + gzx[i][l];
          gW[(2 * i + 1) * kLanes + l] += gz[i][l] * tp.t[l] + gzt[i][l];
          gB[i * kLanes + l] += gz[i][l];
        }
      }
      break;
    }
    lane_state_from_tape(tp, h - 1, s);
    const double* W = net.weights(h);
    double* gB = gl + (kWeightOffset[h] + kW * kW) * kLanes;
    for (int i = 0; i < kW; ++i) {
      for (int j = 0; j < kW; ++j) {
        double* g = gW + (i * kW + j) * kLanes;
        for (int l = 0; l < kLanes; ++l) {
          g[l] += gz[i][l] * s.v[j][l] + gzx[i][l] * s.vx[j][l] + gzt[i][l] * s.vt[j][l] +
                  gzxx[i][l] * s.vxx[j][l];
        }
      }
      for (int l = 0; l < kLanes; ++l) gB[i * kLanes + l] += gz[i][l];
    }
    for (int j = 0; j < kW; ++j) {
      alignas(64) double sa[kLanes] = {0}, sx[kLanes] = {0}, st[kLanes] = {0}, sxx[kLanes] = {0};
      for (int i = 0; i < kW; ++i) {
        const double w = W[i * kW + j];
        for (int l = 0; l < kLanes; ++l) {
          sa[l] += w * gz[i][l];
          sx[l] += w * gzx[i][l];
          st[l] += w * gzt[i][l];
          sxx[l] += w * gzxx[i][l];
        }
      }
      for (int l = 0; l < kLanes; ++l) {
        ga[j][l] = sa[l];
        gax[j][l] = sx[l];
        gat[j][l] = st[l];
        gaxx[j][l] = sxx[l];
      }
    }
  }
}

// One fixed block of up to kBlockPoints points: accumulates sum(r^2) and,
// when requested, the per-slot parameter gradient for this block.
void process_block(const ParallelModel& model, const TermCoeffs& coeffs,
                   const Point* pts, std::size_t n, double grad_scale, bool want_grad,
                   double* out_sq, double* out_grad /* [nets][kParamsPerNet] */) {
  static thread_local std::vector<double> gl_storage;
  double* gl = nullptr;
  if (want_grad) {
    gl_storage.assign(static_cast<std::size_t>(coeffs.nets) * kParamsPerNet * kLanes, 0.0);
    gl = gl_storage.data();
  }
  LaneTape tape[2];
  double sq = 0;
  for (std::size_t at = 0; at < n; at += kLanes) {
    const int lanes = static_cast<int>(n - at < kLanes ? n - at : kLanes);
    alignas(64) double mask[kLanes];
    for (int l = 0; l < kLanes; ++l) {
      const Point& pt = pts[at + (l < lanes ? l : lanes - 1)];
      tape[0].x[l] = pt.x;
      tape[0].t[l] = pt.t;
      mask[l] = l < lanes ? 1.0 : 0.0;
    }
    if (coeffs.nets == 2) {
      std::memcpy(tape[1].x, tape[0].x, sizeof tape[0].x);
      std::memcpy(tape[1].t, tape[0].t, sizeof tape[0].t);
    }
    for (int sidx = 0; sidx < coeffs.nets; ++sidx) {
      forward_group(model.nets[coeffs.w[sidx].slot], tape[sidx]);
    }
    alignas(64) double r[kLanes];
    for (int l = 0; l < kLanes; ++l) {
      double acc = coeffs.c0;
      for (int sidx = 0; sidx < coeffs.nets; ++sidx) {
        const NetTermWeight& w = coeffs.w[sidx];
        acc += w.wv * tape[sidx].y[l] + w.wx * tape[sidx].yx[l] + w.wt * tape[sidx].yt[l] +
               w.wxx * tape[sidx].yxx[l];
      }
      r[l] = acc * mask[l];
    }
    for (int l = 0; l < kLanes; ++l) sq += r[l] * r[l];
    if (want_grad) {
      for (int sidx = 0; sidx < coeffs.nets; ++sidx) {
        const NetTermWeight& w = coeffs.w[sidx];
        alignas(64) double gy[kLanes], gyx[kLanes], gyt[kLanes], gyxx[kLanes];
        for (int l = 0; l < kLanes; ++l) {
          const double seed = grad_scale * r[l];
          gy[l] = seed * w.wv;
          gyx[l] = seed * w.wx;
          gyt[l] = seed * w.wt;
          gyxx[l] = seed * w.wxx;
        }
        reverse_group(model.nets[w.slot], tape[sidx], gy, gyx, gyt, gyxx,
                      gl + static_cast<std::size_t>(sidx) * kParamsPerNet * kLanes);
      }
    }
  }
  *out_sq = sq;
  if (want_grad) {
    for (int sidx = 0; sidx < coeffs.nets; ++sidx) {
      const double* src = gl + static_cast<std::size_t>(sidx) * kParamsPerNet * kLanes;
      double* dst = out_grad + static_cast<std::size_t>(sidx) * kParamsPerNet;
      for (int idx = 0; idx < kParamsPerNet; ++idx) {
        double acc = 0;
        for (int l = 0; l < kLanes; ++l) acc += src[idx * kLanes + l];
        dst[idx] = acc;
      }
    }
  }
}

double accumulate_serial(const ParallelModel& model, const TermCoeffs& coeffs,
                         std::span<const Point> pts, double grad_scale, ModelGradient* grad) {
  double sq = 0;
  ScalarTape tape[2];
  for (const Point& pt : pts) {
    std::array<DualState, 2> outs{};
    for (int sidx = 0; sidx < coeffs.nets; ++sidx) {
      outs[sidx] = forward_scalar(model.nets[coeffs.w[sidx].slot], pt.x, pt.t, &tape[sidx]);
    }
    const double r = residual_from_coeffs(coeffs, outs);
    sq += r * r;
    if (grad) {
      for (int sidx = 0; sidx < coeffs.nets; ++sidx) {
        const NetTermWeight& w = coeffs.w[sidx];
        const double seed = grad_scale * r;
        const DualState cot{seed * w.wv, seed * w.wx, seed * w.wt, seed * w.wxx};
        backward_scalar(model.nets[w.slot], pt.x, pt.t, tape[sidx], cot,
                        grad->nets[w.slot].data());
      }
    }
  }
  return sq;
}

double accumulate_parallel(const ParallelModel& model, const TermCoeffs& coeffs,
                           std::span<const Point> pts, double grad_scale, ModelGradient* grad) {
  const std::int64_t nblocks =
      static_cast<std::int64_t>((pts.size() + kBlockPoints - 1) / kBlockPoints);
  const bool want_grad = grad != nullptr;
  std::vector<double> block_sq(static_cast<std::size_t>(nblocks), 0.0);
  std::vector<double> block_grad;
  if (want_grad) {
    block_grad.assign(static_cast<std::size_t>(nblocks) * coeffs.nets * kParamsPerNet, 0.0);
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < nblocks; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kBlockPoints;
    const std::size_t count = pts.size() - begin < kBlockPoints ? pts.size() - begin : kBlockPoints;
    process_block(model, coeffs, pts.data() + begin, count, grad_scale, want_grad,
                  &block_sq[static_cast<std::size_t>(b)],
                  want_grad
                      ? block_grad.data() + static_cast<std::size_t>(b) * coeffs.nets * kParamsPerNet
                      : nullptr);
  }
  double total = 0;
  for (std::int64_t b = 0; b < nblocks; ++b) total += block_sq[static_cast<std::size_t>(b)];
  if (want_grad) {
    for (std::int64_t b = 0; b < nblocks; ++b) {
      for (int sidx = 0; sidx < coeffs.nets; ++sidx) {
        const double* src =
            block_grad.data() + (static_cast<std::size_t>(b) * coeffs.nets + sidx) * kParamsPerNet;
        double* dst = grad->nets[coeffs.w[sidx].slot].data();
        for (int idx = 0; idx < kParamsPerNet; ++idx) dst[idx] += src[idx];
      }
    }
  }
  return total;
}

}  // namespace

DualState forward_augmented(const NetworkParams& net, double x, double t) {
  return forward_scalar(net, x, t, nullptr);
}

void backward_params(const NetworkParams& net, double x, double t, const DualState& cot,
                     double* grad) {
  ScalarTape tape;
  forward_scalar(net, x, t, &tape);
  backward_scalar(net, x, t, tape, cot, grad);
}

double accumulate_term(const ParallelModel& model, const TermCoeffs& coeffs,
                       std::span<const Point> pts, double grad_scale, EvalMode mode,
                       ModelGradient* grad) {
  if (coeffs.nets < 1 || coeffs.nets > 2) throw std::invalid_argument("bad term coefficients");
  for (int sidx = 0; sidx < coeffs.nets; ++sidx) {
    if (coeffs.w[sidx].slot < 0 || coeffs.w[sidx].slot >= model.slot_count()) {
      throw std::invalid_argument("term references a parameter slot outside the model");
    }
  }
  if (grad && static_cast<int>(grad->nets.size()) != model.slot_count()) {
    throw std::invalid_argument("gradient shape does not match the model");
  }
  if (pts.empty()) return 0.0;
  if (mode == EvalMode::Serial) return accumulate_serial(model, coeffs, pts, grad_scale, grad);
  return accumulate_parallel(model, coeffs, pts, grad_scale, grad);
}

}  // namespace thermopinn
