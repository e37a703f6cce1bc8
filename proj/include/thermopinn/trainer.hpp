// Loss assembly and optimization. The composite loss is the sum over the
// twelve residual families of k^2 * mean(r^2), where k is the class
// coefficient (alpha for value terms, beta for flux terms, gamma for the
// interior conduction residuals). Full-batch Adam drives the parameters;
// records, gradient histograms and the mean-square error against a reference
// field come out alongside the trained model.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "thermopinn/autodiff.hpp"
#include "thermopinn/collocation.hpp"
#include "thermopinn/fdm.hpp"
#include "thermopinn/params.hpp"
#include "thermopinn/physics.hpp"

namespace thermopinn {

struct BalanceCoefficients {
  double alpha = 1.0;  // class 1: value constraints
  double beta = 1.0;   // class 2: flux constraints
  double gamma = 1.0;  // class 3: interior conduction residuals

  double for_class(int cls) const;
  double for_term(TermId id) const { return for_class(loss_class(id)); }
};

struct CompositeLoss {
  double total = 0;
  std::array<double, kTermCount> scaled{};    // k^2 * mean(r^2) per term
  std::array<double, kTermCount> unscaled{};  // mean(r^2) per term
};

// Evaluates the composite loss; if grad is non-null it must match the model
// shape and receives the full-batch gradient (it is zeroed first).
CompositeLoss composite_loss(const ParallelModel& model, const CollocationGrid& grid,
                             const EnvironmentConfig& env, const BalanceCoefficients& coeffs,
                             EvalMode mode, ModelGradient* grad);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamConfig cfg;
  long step = 0;
  ModelGradient m, v;

  explicit OptimizerState(int slots, AdamConfig c = {});
};

void adam_step(ParallelModel& model, const ModelGradient& grad, OptimizerState& state);

struct TrainRecord {
  long epoch = 0;       // loss/gradient were evaluated at this epoch's start
  CompositeLoss loss;
  double wall_s = 0;    // seconds since training started
};

// Signed log-magnitude histogram of one full-batch gradient: bins 0..31 hold
// negative components (largest magnitude first), 32..63 positive ones, one
// decade per bin spanning 1e-24..1e8; exact zeros are not counted.
struct GradientSnapshot {
  long epoch = 0;
  // [slot][affine layer][bin]
  std::vector<std::array<std::array<long, 64>, kAffineLayers>> counts;
};

GradientSnapshot gradient_histogram(const ModelGradient& grad, long epoch);

struct TrainOptions {
  long epochs = 20000;
  std::uint64_t seed = 42;
  bool shared = false;
  AdamConfig adam{};
  BalanceCoefficients coeffs{};
  EvalMode mode = EvalMode::Parallel;
  long record_every = 100;
  std::vector<long> snapshot_epochs{};
  double divergence_factor = 1e3;  // abort when loss exceeds this multiple of the start
  std::function<void(const TrainRecord&)> on_record{};
};

struct TrainResult {
  ParallelModel model;
  std::vector<TrainRecord> records;      // always includes first and final epoch
  std::vector<GradientSnapshot> snapshots;
  bool diverged = false;
  long stopped_at = 0;                   // epochs completed
  double final_loss = 0;
};

TrainResult train(const EnvironmentConfig& env, const CollocationGrid& grid,
                  const TrainOptions& opts);

struct MseReport {
  std::array<double, kLayerCount> per_layer{};  // kK^2, layer nodes x all times
  std::array<std::size_t, kLayerCount> count{};
  double total = 0;  // point-count weighted mean of the per-layer values
};

// Prediction error against a reference field whose nodes sit on the
// collocation coordinates (interface nodes count toward both layers).
MseReport mse_vs_reference(const ParallelModel& model, const EnvironmentConfig& env,
                           const Units& units, const FdmResult& reference);

}  // namespace thermopinn
