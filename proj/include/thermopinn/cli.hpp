// Command-line front end plus the reusable train pipeline (calibrate ->
// reference solve -> train -> error report) that the train and sweep
// subcommands and the acceptance harness all share.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thermopinn/balance.hpp"
#include "thermopinn/trainer.hpp"

namespace thermopinn {

// Model presets: unit mode, parameter sharing, and whether the class
// coefficients come from calibration or stay at one.
struct PresetSpec {
  UnitMode units = UnitMode::Scaled;
  bool shared = false;
  bool calibrated = true;
};

PresetSpec preset_spec(const std::string& name);  // M1..M5

struct TrainPipelineOptions {
  std::string preset = "M1";
  PresetSpec spec{};
  long epochs = 20000;
  std::uint64_t seed = 42;
  double lr = 1e-3;
  long record_every = 100;
  std::vector<long> snapshot_epochs{};
  EvalMode mode = EvalMode::Parallel;
  // Requested reference-solver steps (raised to stability automatically);
  // unset falls back to the config's fdm_steps or the built-in default.
  std::optional<long> fdm_steps{};
  int cal_experiments = 50;
  double cal_alpha = 1e-2;
  SearchGrid cal_grid{};
  std::optional<BalanceCoefficients> coeffs_override{};
  bool quiet = true;  // suppress per-record progress lines on stderr
};

struct TrainPipelineResult {
  TrainResult train;
  MseReport mse;
  BalanceCoefficients coeffs{};
  std::optional<InitialStats> stats{};
  std::optional<CalibrationResult> calibration{};
  long fdm_steps_used = 0;
  double energy_residual = 0;
};

// Runs the pipeline and, when out_dir is non-empty, writes checkpoint,
// training log, error report, calibration files, reference field and
// manifest into it.
TrainPipelineResult run_train_pipeline(const EnvironmentConfig& env,
                                       const TrainPipelineOptions& opts,
                                       const std::string& out_dir);

void write_training_log(const std::string& path, const std::vector<TrainRecord>& records);
void write_gradient_snapshots(const std::string& path,
                              const std::vector<GradientSnapshot>& snapshots);
void write_mse_report(const std::string& path, const MseReport& rep);

int run_cli(int argc, char** argv);

}  // namespace thermopinn
