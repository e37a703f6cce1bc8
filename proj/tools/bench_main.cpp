// Benchmark of the two loss/gradient evaluation paths: the scalar serial
// reference versus the lane-batched parallel kernel, on the default fabric
// problem. Also cross-checks that the two agree.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include <CLI11.hpp>

#include "thermopinn/collocation.hpp"
#include "thermopinn/trainer.hpp"

using namespace thermopinn;

namespace {

double time_epochs(const ParallelModel& model, const CollocationGrid& grid,
                   const EnvironmentConfig& env, EvalMode mode, int reps, CompositeLoss* loss_out,
                   ModelGradient* grad_out) {
  ModelGradient grad(model.slot_count());
  CompositeLoss loss;
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) {
    loss = composite_loss(model, grid, env, BalanceCoefficients{}, mode, &grad);
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (loss_out) *loss_out = loss;
  if (grad_out) *grad_out = grad;
  return dt / reps;
}

double max_rel_diff(const ModelGradient& a, const ModelGradient& b) {
  double worst = 0;
  for (std::size_t s = 0; s < a.nets.size(); ++s) {
    for (int i = 0; i < kParamsPerNet; ++i) {
      const double x = a.nets[s][i], y = b.nets[s][i];
      const double denom = std::max({std::abs(x), std::abs(y), 1e-12});
      worst = std::max(worst, std::abs(x - y) / denom);
    }
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thermopinn_bench: serial reference vs lane-batched kernel"};
  int serial_reps = 3;
  int parallel_reps = 20;
  std::uint64_t seed = 1;
  app.add_option("--serial-reps", serial_reps, "timed repetitions, serial path");
  app.add_option("--parallel-reps", parallel_reps, "timed repetitions, parallel path");
  app.add_option("--seed", seed, "model seed");
  CLI11_PARSE(app, argc, argv);

  const EnvironmentConfig env = default_environment();
  const Units units = Units::scaled();
  const CollocationGrid grid = build_grid(env, units);
  const ParallelModel model = make_model(seed, false);
  std::printf("collocation points: %zu (full batch)\n", grid.total_points());

  CompositeLoss loss_s, loss_p;
  ModelGradient grad_s(model.slot_count()), grad_p(model.slot_count());
  const double t_serial = time_epochs(model, grid, env, EvalMode::Serial, serial_reps, &loss_s,
                                      &grad_s);
  const double t_parallel = time_epochs(model, grid, env, EvalMode::Parallel, parallel_reps,
                                        &loss_p, &grad_p);

  const double loss_diff =
      std::abs(loss_s.total - loss_p.total) / std::max(std::abs(loss_s.total), 1e-300);
  std::printf("serial reference : %8.2f ms/epoch\n", t_serial * 1e3);
  std::printf("batched kernel   : %8.2f ms/epoch\n", t_parallel * 1e3);
  std::printf("speedup          : %8.2fx\n", t_serial / t_parallel);
  std::printf("loss rel diff    : %.3e\n", loss_diff);
  std::printf("grad rel diff    : %.3e\n", max_rel_diff(grad_s, grad_p));
  return loss_diff < 1e-10 ? 0 : 1;
}
