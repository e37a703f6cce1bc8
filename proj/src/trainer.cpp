#include "thermopinn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace thermopinn {

double BalanceCoefficients::for_class(int cls) const {
  switch (cls) {
    case 1: return alpha;
    case 2: return beta;
    case 3: return gamma;
  }
  throw std::invalid_argument("loss class must be 1, 2 or 3");
}

CompositeLoss composite_loss(const ParallelModel& model, const CollocationGrid& grid,
                             const EnvironmentConfig& env, const BalanceCoefficients& coeffs,
                             EvalMode mode, ModelGradient* grad) {
  if (grad) grad->zero();
  CompositeLoss out;
  const std::array<int, 3> slots = model.slot_of_layer();
  for (int ti = 0; ti < kTermCount; ++ti) {
    const TermId id = kAllTerms[ti];
    const TermCoeffs tc = term_coefficients(id, env, grid.units, slots);
    const std::vector<Point>& pts = grid.partition(id);
    if (pts.empty()) throw std::logic_error("empty collocation partition");
    const double k = coeffs.for_term(id);
    const double inv_n = 1.0 / static_cast<double>(pts.size());
    const double sum_sq =
        accumulate_term(model, tc, pts, grad ? 2.0 * k * k * inv_n : 0.0, mode, grad);
    out.unscaled[ti] = sum_sq * inv_n;
    out.scaled[ti] = k * k * out.unscaled[ti];
    out.total += out.scaled[ti];
  }
  return out;
}

OptimizerState::OptimizerState(int slots, AdamConfig c) : cfg(c), m(slots), v(slots) {
  m.zero();
  v.zero();
}

void adam_step(ParallelModel& model, const ModelGradient& grad, OptimizerState& state) {
  if (grad.nets.size() != model.nets.size() || state.m.nets.size() != model.nets.size()) {
    throw std::invalid_argument("optimizer/gradient shape does not match the model");
  }
  ++state.step;
  const AdamConfig& c = state.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t s = 0; s < model.nets.size(); ++s) {
    double* p = model.nets[s].p.data();
    const double* g = grad.nets[s].data();
    double* m = state.m.nets[s].data();
    double* v = state.v.nets[s].data();
    for (int i = 0; i < kParamsPerNet; ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

GradientSnapshot gradient_histogram(const ModelGradient& grad, long epoch) {
  GradientSnapshot snap;
  snap.epoch = epoch;
  snap.counts.resize(grad.nets.size());
  for (auto& per_slot : snap.counts) {
    for (auto& layer : per_slot) layer.fill(0);
  }
  for (std::size_t s = 0; s < grad.nets.size(); ++s) {
    for (int l = 0; l < kAffineLayers; ++l) {
      const int begin = kWeightOffset[l];
      const int end = begin + kFanIn[l] * kFanOut[l] + kFanOut[l];
      for (int i = begin; i < end; ++i) {
        const double g = grad.nets[s][i];
        if (g == 0.0) continue;
        int decade = static_cast<int>(std::floor(std::log10(std::abs(g))));
        decade = std::clamp(decade, -24, 7);
        const int mag_bin = decade + 24;  // 0..31
        const int bin = g < 0 ? 31 - mag_bin : 32 + mag_bin;
        ++snap.counts[s][l][bin];
      }
    }
  }
  return snap;
}

TrainResult train(const EnvironmentConfig& env, const CollocationGrid& grid,
                  const TrainOptions& opts) {
  if (opts.epochs < 1) throw std::invalid_argument("need at least 1 epoch");
  if (opts.record_every < 1) throw std::invalid_argument("record_every must be positive");

  TrainResult out;
  out.model = make_model(opts.seed, opts.shared);
  OptimizerState opt(out.model.slot_count(), opts.adam);
  ModelGradient grad(out.model.slot_count());

  std::vector<long> snaps = opts.snapshot_epochs;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  auto push_record = [&](long epoch, const CompositeLoss& loss) {
    out.records.push_back({epoch, loss, elapsed()});
    if (opts.on_record) opts.on_record(out.records.back());
  };

  double initial_total = 0;
  for (long epoch = 0; epoch < opts.epochs; ++epoch) {
    const CompositeLoss loss = composite_loss(out.model, grid, env, opts.coeffs, opts.mode, &grad);
    if (epoch == 0) initial_total = loss.total;
    const bool bad = !std::isfinite(loss.total) ||
                     loss.total > opts.divergence_factor * std::max(initial_total, 1e-300);
    if (epoch % opts.record_every == 0 || bad) push_record(epoch, loss);
    if (bad) {
      out.diverged = true;
      out.stopped_at = epoch;
      out.final_loss = loss.total;
      return out;
    }
    while (next_snap < snaps.size() && snaps[next_snap] == epoch) {
      out.snapshots.push_back(gradient_histogram(grad, epoch));
      ++next_snap;
    }
    adam_step(out.model, grad, opt);
  }
  const CompositeLoss final_loss =
      composite_loss(out.model, grid, env, opts.coeffs, opts.mode, nullptr);
  push_record(opts.epochs, final_loss);
  out.stopped_at = opts.epochs;
  out.final_loss = final_loss.total;
  return out;
}

MseReport mse_vs_reference(const ParallelModel& model, const EnvironmentConfig& env,
                           const Units& units, const FdmResult& reference) {
  MseReport rep;
  double weighted = 0;
  std::size_t total_count = 0;
  for (int li = 0; li < kLayerCount; ++li) {
    const Layer layer = static_cast<Layer>(li);
    const std::vector<double> nodes = layer_nodes_m(env, layer);
    const std::size_t start = reference.layer_start[li];
    if (start + nodes.size() > reference.nx()) {
      throw std::invalid_argument("reference field does not cover the layer nodes");
    }
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if (std::abs(reference.x[start + j] - nodes[j]) > 1e-12 * env.total_thickness()) {
        throw std::invalid_argument("reference field nodes do not match the collocation nodes");
      }
    }
    const NetworkParams& net = model.for_layer(layer);
    double acc = 0;
    for (std::size_t ti = 0; ti < reference.nt(); ++ti) {
      const double t = reference.t[ti];
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        const DualState o = forward_augmented(net, scale_coordinate(nodes[j], units), t);
        const double pred_K = unscale_prediction(o.v, units);
        const double diff_kK = (pred_K - reference.at(ti, start + j)) * 1e-3;
        acc += diff_kK * diff_kK;
      }
    }
    rep.count[li] = nodes.size() * reference.nt();
    rep.per_layer[li] = acc / static_cast<double>(rep.count[li]);
    weighted += acc;
    total_count += rep.count[li];
  }
  rep.total = weighted / static_cast<double>(total_count);
  return rep;
}

}  // namespace thermopinn
