#include "thermopinn/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "thermopinn/manifest.hpp"
#include "thermopinn/util.hpp"

namespace thermopinn {

PresetSpec preset_spec(const std::string& name) {
  if (name == "M1") return {UnitMode::Scaled, false, true};
  if (name == "M2") return {UnitMode::Scaled, false, false};
  if (name == "M3") return {UnitMode::Raw, false, true};
  if (name == "M4") return {UnitMode::Raw, false, false};
  if (name == "M5") return {UnitMode::Scaled, true, true};
  throw std::invalid_argument("unknown preset '" + name + "' (expected M1..M5)");
}

void write_training_log(const std::string& path, const std::vector<TrainRecord>& records) {
  std::ostringstream out;
  out << "epoch,total";
  for (TermId id : kAllTerms) out << "," << term_name(id);
  for (TermId id : kAllTerms) out << "," << term_name(id) << "_unscaled";
  out << "\n";
  for (const TrainRecord& r : records) {
    out << r.epoch << "," << format_double(r.loss.total);
    for (int t = 0; t < kTermCount; ++t) out << "," << format_double(r.loss.scaled[t]);
    for (int t = 0; t < kTermCount; ++t) out << "," << format_double(r.loss.unscaled[t]);
    out << "\n";
  }
  write_text_file(path, out.str());
}

// Signed left edge of a histogram bin as an exact decimal (bins are decades;
// 0..31 negative from -1e8, 32..63 positive up to 1e7).
std::string bin_edge_label(int bin) {
  return bin < 32 ? "-1e" + std::to_string(8 - bin) : "1e" + std::to_string(bin - 56);
}

void write_gradient_snapshots(const std::string& path,
                              const std::vector<GradientSnapshot>& snapshots) {
  std::ostringstream out;
  out << "epoch,network,layer,bin_edge,count\n";
  for (const GradientSnapshot& s : snapshots) {
    for (std::size_t net = 0; net < s.counts.size(); ++net) {
      for (int layer = 0; layer < kAffineLayers; ++layer) {
        for (int bin = 0; bin < 64; ++bin) {
          const long c = s.counts[net][layer][bin];
          if (c == 0) continue;
          out << s.epoch << "," << net << "," << layer << "," << bin_edge_label(bin) << "," << c
              << "\n";
        }
      }
    }
  }
  write_text_file(path, out.str());
}

void write_mse_report(const std::string& path, const MseReport& rep) {
  std::ostringstream out;
  out << "layer,points,mse_kK2\n";
  std::size_t total_points = 0;
  for (int li = 0; li < kLayerCount; ++li) {
    out << layer_name(static_cast<Layer>(li)) << "," << rep.count[li] << ","
        << format_double(rep.per_layer[li]) << "\n";
    total_points += rep.count[li];
  }
  out << "total," << total_points << "," << format_double(rep.total) << "\n";
  write_text_file(path, out.str());
}

namespace {

Units units_for(UnitMode mode) {
  return mode == UnitMode::Scaled ? Units::scaled() : Units::raw();
}

int current_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void apply_thread_count(int threads) {
  if (threads < 1) throw std::invalid_argument("thread count must be positive");
#ifdef _OPENMP
  omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

RunManifest base_manifest(const std::string& command, const EnvironmentConfig& env) {
  RunManifest m;
  m.command = command;
  m.preset = "custom";
  m.env = env;
  m.threads = current_threads();
  return m;
}

struct WallClock {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

}  // namespace

TrainPipelineResult run_train_pipeline(const EnvironmentConfig& env,
                                       const TrainPipelineOptions& opts,
                                       const std::string& out_dir) {
  env.validate();
  const WallClock clock;
  const Units units = units_for(opts.spec.units);
  const CollocationGrid grid = build_grid(env, units);
  if (!out_dir.empty()) ensure_dir(out_dir);

  TrainPipelineResult res;
  if (opts.coeffs_override) {
    res.coeffs = *opts.coeffs_override;
  } else if (opts.spec.calibrated) {
    res.stats = collect_initial_stats(env, grid, opts.cal_experiments, opts.seed,
                                      opts.spec.shared, opts.mode);
    res.calibration = calibrate(res.stats->class_range, opts.cal_alpha, opts.cal_grid);
    res.coeffs = res.calibration->coeffs;
  } else {
    res.coeffs = BalanceCoefficients{};  // 1, 1, 1
  }

  const int n_snapshots = env.segments[3] + 1;
  const long requested = opts.fdm_steps.value_or(env.fdm_steps.value_or(kDefaultFdmSteps));
  res.fdm_steps_used = stable_fdm_steps(env, requested, n_snapshots);
  const FdmResult reference = solve_fdm(env, res.fdm_steps_used, n_snapshots);
  res.energy_residual = energy_balance_residual(reference, env);

  TrainOptions topts;
  topts.epochs = opts.epochs;
  topts.seed = opts.seed;
  topts.shared = opts.spec.shared;
  topts.adam.lr = opts.lr;
  topts.coeffs = res.coeffs;
  topts.mode = opts.mode;
  topts.record_every = opts.record_every;
  topts.snapshot_epochs = opts.snapshot_epochs;
  if (!opts.quiet) {
    topts.on_record = [](const TrainRecord& r) {
      std::fprintf(stderr, "epoch %ld  loss %.6e  (%.1f s)\n", r.epoch, r.loss.total, r.wall_s);
    };
  }
  res.train = train(env, grid, topts);
  res.mse = mse_vs_reference(res.train.model, env, units, reference);

  if (!out_dir.empty()) {
    CheckpointMeta meta;
    meta.seed = opts.seed;
    meta.units = opts.spec.units;
    meta.label = opts.preset;
    save_checkpoint(join_path(out_dir, "checkpoint.txt"), res.train.model, meta);
    write_training_log(join_path(out_dir, "training_log.csv"), res.train.records);
    write_mse_report(join_path(out_dir, "mse.csv"), res.mse);
    if (!res.train.snapshots.empty()) {
      write_gradient_snapshots(join_path(out_dir, "gradient_snapshots.csv"),
                               res.train.snapshots);
    }
    if (res.stats && res.calibration) {
      write_calibration_report(join_path(out_dir, "calibration.csv"), *res.stats,
                               *res.calibration);
      write_calibration_scan(join_path(out_dir, "calibration_scan.csv"), *res.calibration);
    }
    save_field(join_path(out_dir, "reference_field.txt"), reference);

    RunManifest man = base_manifest("train", env);
    man.preset = opts.preset;
    man.units = opts.spec.units;
    man.shared = opts.spec.shared;
    man.seed = opts.seed;
    man.epochs = opts.epochs;
    man.lr = opts.lr;
    man.coeffs = res.coeffs;
    man.mode = opts.mode;
    man.outputs["checkpoint"] = "checkpoint.txt";
    man.outputs["training_log"] = "training_log.csv";
    man.outputs["mse"] = "mse.csv";
    man.outputs["reference_field"] = "reference_field.txt";
    if (res.calibration) {
      man.outputs["calibration"] = "calibration.csv";
      man.outputs["calibration_scan"] = "calibration_scan.csv";
    }
    if (!res.train.snapshots.empty()) man.outputs["gradient_snapshots"] = "gradient_snapshots.csv";
    man.metrics["final_loss"] = res.train.final_loss;
    man.metrics["mse_total_kK2"] = res.mse.total;
    for (int li = 0; li < kLayerCount; ++li) {
      man.metrics[std::string("mse_") + layer_name(static_cast<Layer>(li)) + "_kK2"] =
          res.mse.per_layer[li];
    }
    man.metrics["alpha"] = res.coeffs.alpha;
    man.metrics["beta"] = res.coeffs.beta;
    man.metrics["gamma"] = res.coeffs.gamma;
    man.metrics["fdm_steps"] = static_cast<double>(res.fdm_steps_used);
    man.metrics["energy_residual"] = res.energy_residual;
    man.metrics["diverged"] = res.train.diverged ? 1.0 : 0.0;
    man.wall_seconds = clock.seconds();
    write_manifest(join_path(out_dir, "manifest.json"), man);
  }
  return res;
}

namespace {

// ------------------------------------------------------------ subcommands --

struct FdmArgs {
  std::string config;
  std::string out;
  std::optional<long> steps;  // flag > config > default
  int snapshots = 0;          // 0: segments[3] + 1
};

int cmd_fdm(const FdmArgs& a) {
  const WallClock clock;
  EnvironmentConfig env = a.config.empty() ? default_environment() : load_environment(a.config);
  const int n_snapshots = a.snapshots > 0 ? a.snapshots : env.segments[3] + 1;
  const long requested = a.steps.value_or(env.fdm_steps.value_or(kDefaultFdmSteps));
  const long steps = stable_fdm_steps(env, requested, n_snapshots);
  const FdmResult field = solve_fdm(env, steps, n_snapshots);
  const double energy = energy_balance_residual(field, env);

  double q = 0;
  const std::vector<double> steady = steady_state_profile(env, field.x, &q);
  ensure_dir(a.out);
  save_field(join_path(a.out, "field.txt"), field);
  save_field_csv(join_path(a.out, "field.csv"), field);
  save_field_binary(join_path(a.out, "field.bin"), field);
  {
    std::ostringstream csv;
    csv << "x_m,T_steady_K\n";
    for (std::size_t i = 0; i < field.x.size(); ++i) {
      csv << format_double(field.x[i]) << "," << format_double(steady[i]) << "\n";
    }
    write_text_file(join_path(a.out, "steady.csv"), csv.str());
  }
  {
    // Boundary fluxes at every native step; the temperature field itself is
    // kept at snapshot resolution (raise --snapshots for a denser export).
    std::ostringstream csv;
    csv << "step,t_s,flux_in_W_m2,flux_out_W_m2\n";
    for (std::size_t i = 0; i < field.flux_in.size(); ++i) {
      csv << i << "," << format_double(static_cast<double>(i) * field.dt) << ","
          << format_double(field.flux_in[i]) << "," << format_double(field.flux_out[i]) << "\n";
    }
    write_text_file(join_path(a.out, "traces.csv"), csv.str());
  }
  RunManifest man = base_manifest("fdm", env);
  man.outputs["field"] = "field.txt";
  man.outputs["field_csv"] = "field.csv";
  man.outputs["field_binary"] = "field.bin";
  man.outputs["steady"] = "steady.csv";
  man.outputs["traces"] = "traces.csv";
  man.metrics["steps"] = static_cast<double>(steps);
  man.metrics["dt_s"] = field.dt;
  man.metrics["energy_residual"] = energy;
  man.metrics["steady_flux_W_m2"] = q;
  for (int li = 0; li < kLayerCount; ++li) {
    man.metrics[std::string("fourier_") + layer_name(static_cast<Layer>(li))] = field.fourier[li];
  }
  man.wall_seconds = clock.seconds();
  write_manifest(join_path(a.out, "manifest.json"), man);
  std::printf("reference solve: %ld steps, dt = %s s\n", steps, format_double(field.dt).c_str());
  std::printf("fourier numbers: shl %.4f, msr %.4f, lin %.4f\n", field.fourier[0],
              field.fourier[1], field.fourier[2]);
  std::printf("energy balance residual: %.3e\n", energy);
  std::printf("steady through-flux: %.4f W/m^2\n", q);
  std::printf("wrote %s\n", join_path(a.out, "field.txt").c_str());
  return 0;
}

struct CalibrateArgs {
  std::string config;
  std::string out;
  int n_exp = 50;
  std::uint64_t seed = 42;
  bool raw = false;
  bool shared = false;
  bool serial = false;
  double alpha = 1e-2;
  SearchGrid grid{};
};

int cmd_calibrate(const CalibrateArgs& a) {
  const WallClock clock;
  EnvironmentConfig env = a.config.empty() ? default_environment() : load_environment(a.config);
  const Units units = units_for(a.raw ? UnitMode::Raw : UnitMode::Scaled);
  const CollocationGrid grid = build_grid(env, units);
  const EvalMode mode = a.serial ? EvalMode::Serial : EvalMode::Parallel;
  const InitialStats stats = collect_initial_stats(env, grid, a.n_exp, a.seed, a.shared, mode);
  const CalibrationResult result = calibrate(stats.class_range, a.alpha, a.grid);

  ensure_dir(a.out);
  write_calibration_report(join_path(a.out, "calibration.csv"), stats, result);
  write_calibration_scan(join_path(a.out, "calibration_scan.csv"), result);

  RunManifest man = base_manifest("calibrate", env);
  man.units = units.mode;
  man.shared = a.shared;
  man.seed = a.seed;
  man.coeffs = result.coeffs;
  man.mode = mode;
  man.outputs["calibration"] = "calibration.csv";
  man.outputs["calibration_scan"] = "calibration_scan.csv";
  man.metrics["n_experiments"] = a.n_exp;
  man.metrics["alpha"] = result.coeffs.alpha;
  man.metrics["beta"] = result.coeffs.beta;
  man.metrics["gamma"] = result.coeffs.gamma;
  man.metrics["iou_flux"] = result.iou_flux;
  man.metrics["iou_interior"] = result.iou_interior;
  for (int cls = 1; cls <= 3; ++cls) {
    man.metrics["class" + std::to_string(cls) + "_min"] = stats.class_range[cls - 1].first;
    man.metrics["class" + std::to_string(cls) + "_max"] = stats.class_range[cls - 1].second;
  }
  man.wall_seconds = clock.seconds();
  write_manifest(join_path(a.out, "manifest.json"), man);

  for (int cls = 1; cls <= 3; ++cls) {
    std::printf("class %d loss range: [%.6e, %.6e]\n", cls, stats.class_range[cls - 1].first,
                stats.class_range[cls - 1].second);
  }
  std::printf("alpha = %s (fixed)\n", format_double(result.coeffs.alpha).c_str());
  std::printf("beta  = %s (IOU %.6f)\n", format_double(result.coeffs.beta).c_str(),
              result.iou_flux);
  std::printf("gamma = %s (IOU %.6f)\n", format_double(result.coeffs.gamma).c_str(),
              result.iou_interior);
  return 0;
}

struct TrainArgs {
  std::string config;
  std::string out;
  std::string preset = "M1";
  std::string units;        // "", "scaled", "raw"
  int shared = -1;          // -1: preset default
  std::string balance;      // "", "auto", "unit", "manual"
  std::string coeffs_path;  // calibration report to take alpha/beta/gamma from
  double alpha = 1e-2, beta = 0, gamma = 0;
  long epochs = 20000;
  std::uint64_t seed = 42;
  double lr = 1e-3;
  long record_every = 100;
  std::string snapshot_epochs;
  bool serial = false;
  bool verbose = false;
  std::optional<long> fdm_steps;
  int cal_experiments = 50;
};

std::vector<long> parse_long_list(const std::string& text) {
  std::vector<long> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(parse_long(item));
  }
  return out;
}

TrainPipelineOptions pipeline_options(const TrainArgs& a) {
  TrainPipelineOptions opts;
  opts.preset = a.preset;
  opts.spec = preset_spec(a.preset);
  if (!a.units.empty()) opts.spec.units = unit_mode_from_name(a.units);
  if (a.shared >= 0) opts.spec.shared = a.shared != 0;
  if (!a.coeffs_path.empty()) {
    if (!a.balance.empty()) {
      throw std::invalid_argument("--coeffs and --balance are mutually exclusive");
    }
    opts.coeffs_override = read_calibration_coefficients(a.coeffs_path);
  } else if (a.balance == "auto") {
    opts.spec.calibrated = true;
  } else if (a.balance == "unit") {
    opts.spec.calibrated = false;
  } else if (a.balance == "manual") {
    if (!(a.beta > 0) || !(a.gamma > 0) || !(a.alpha > 0)) {
      throw std::invalid_argument("--balance manual needs positive --alpha, --beta and --gamma");
    }
    opts.coeffs_override = BalanceCoefficients{a.alpha, a.beta, a.gamma};
  } else if (!a.balance.empty()) {
    throw std::invalid_argument("--balance must be auto, unit or manual");
  }
  opts.epochs = a.epochs;
  opts.seed = a.seed;
  opts.lr = a.lr;
  opts.record_every = a.record_every;
  opts.snapshot_epochs = parse_long_list(a.snapshot_epochs);
  opts.mode = a.serial ? EvalMode::Serial : EvalMode::Parallel;
  opts.fdm_steps = a.fdm_steps;
  opts.cal_experiments = a.cal_experiments;
  opts.cal_alpha = a.alpha;
  opts.quiet = !a.verbose;
  return opts;
}

void print_pipeline_summary(const std::string& tag, const TrainPipelineResult& res) {
  std::printf("%s: alpha %.3e  beta %.3e  gamma %.3e\n", tag.c_str(), res.coeffs.alpha,
              res.coeffs.beta, res.coeffs.gamma);
  if (res.train.diverged) {
    std::printf("%s: DIVERGED at epoch %ld (loss %.6e)\n", tag.c_str(), res.train.stopped_at,
                res.train.final_loss);
  } else {
    std::printf("%s: final loss %.6e after %ld epochs\n", tag.c_str(), res.train.final_loss,
                res.train.stopped_at);
  }
  std::printf("%s: mse_kK2 total %.6e (shl %.6e, msr %.6e, lin %.6e)\n", tag.c_str(),
              res.mse.total, res.mse.per_layer[0], res.mse.per_layer[1], res.mse.per_layer[2]);
}

int cmd_train(const TrainArgs& a) {
  EnvironmentConfig env = a.config.empty() ? default_environment() : load_environment(a.config);
  const TrainPipelineOptions opts = pipeline_options(a);
  const TrainPipelineResult res = run_train_pipeline(env, opts, a.out);
  print_pipeline_summary(a.preset, res);
  return res.train.diverged ? 1 : 0;
}

struct SweepArgs {
  TrainArgs train;
  std::string horizons = "10,30,60,120";
};

int cmd_sweep(const SweepArgs& a) {
  EnvironmentConfig env =
      a.train.config.empty() ? default_environment() : load_environment(a.train.config);
  std::vector<long> horizons = parse_long_list(a.horizons);
  if (horizons.empty()) throw std::invalid_argument("no horizons given");
  ensure_dir(a.train.out);

  const WallClock clock;
  std::ostringstream csv;
  csv << "horizon_s,epochs,final_loss,mse_total_kK2,mse_shl_kK2,mse_msr_kK2,mse_lin_kK2\n";
  RunManifest man = base_manifest("sweep-time", env);
  man.preset = a.train.preset;
  man.seed = a.train.seed;
  man.epochs = a.train.epochs;
  man.lr = a.train.lr;
  const PresetSpec spec = preset_spec(a.train.preset);
  man.units = spec.units;
  man.shared = spec.shared;
  man.mode = a.train.serial ? EvalMode::Serial : EvalMode::Parallel;

  for (long h : horizons) {
    EnvironmentConfig henv = env;
    henv.horizon = static_cast<double>(h);
    const std::string sub = join_path(a.train.out, "h" + std::to_string(h));
    const TrainPipelineOptions opts = pipeline_options(a.train);
    const TrainPipelineResult res = run_train_pipeline(henv, opts, sub);
    print_pipeline_summary(a.train.preset + " h=" + std::to_string(h), res);
    csv << h << "," << a.train.epochs << "," << format_double(res.train.final_loss) << ","
        << format_double(res.mse.total) << "," << format_double(res.mse.per_layer[0]) << ","
        << format_double(res.mse.per_layer[1]) << "," << format_double(res.mse.per_layer[2])
        << "\n";
    man.metrics["mse_total_kK2_h" + std::to_string(h)] = res.mse.total;
    man.outputs["h" + std::to_string(h)] = "h" + std::to_string(h);
  }
  write_text_file(join_path(a.train.out, "sweep.csv"), csv.str());
  man.outputs["sweep"] = "sweep.csv";
  man.wall_seconds = clock.seconds();
  write_manifest(join_path(a.train.out, "manifest.json"), man);
  std::printf("wrote %s\n", join_path(a.train.out, "sweep.csv").c_str());
  return 0;
}

struct EvaluateArgs {
  std::string checkpoint;
  std::string config;
  std::string out;
  std::optional<long> fdm_steps;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const WallClock clock;
  EnvironmentConfig env = a.config.empty() ? default_environment() : load_environment(a.config);
  CheckpointMeta meta;
  const ParallelModel model = load_checkpoint(a.checkpoint, &meta);
  const Units units = units_for(meta.units);

  const int n_snapshots = env.segments[3] + 1;
  const long requested = a.fdm_steps.value_or(env.fdm_steps.value_or(kDefaultFdmSteps));
  const long steps = stable_fdm_steps(env, requested, n_snapshots);
  const FdmResult reference = solve_fdm(env, steps, n_snapshots);
  const MseReport rep = mse_vs_reference(model, env, units, reference);

  ensure_dir(a.out);
  write_mse_report(join_path(a.out, "mse.csv"), rep);
  FdmResult pred = reference;
  for (std::size_t ti = 0; ti < pred.nt(); ++ti) {
    for (int li = 0; li < kLayerCount; ++li) {
      const Layer layer = static_cast<Layer>(li);
      const std::vector<double> nodes = layer_nodes_m(env, layer);
      const NetworkParams& net = model.for_layer(layer);
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        const DualState o = forward_augmented(net, scale_coordinate(nodes[j], units), pred.t[ti]);
        // Interface nodes take the right layer's value (written last).
        pred.T[ti * pred.nx() + reference.layer_start[li] + j] = unscale_prediction(o.v, units);
      }
    }
  }
  pred.flux_in.clear();
  pred.flux_out.clear();
  save_field(join_path(a.out, "predictions.txt"), pred);
  {
    std::ostringstream csv;
    csv << "x_m,t_s,error_kK\n";
    for (std::size_t ti = 0; ti < pred.nt(); ++ti) {
      for (std::size_t xi = 0; xi < pred.nx(); ++xi) {
        const double err_kK = (pred.at(ti, xi) - reference.at(ti, xi)) * 1e-3;
        csv << format_double(pred.x[xi]) << "," << format_double(pred.t[ti]) << ","
            << format_double(err_kK) << "\n";
      }
    }
    write_text_file(join_path(a.out, "error_field.csv"), csv.str());
  }

  RunManifest man = base_manifest("evaluate", env);
  man.units = meta.units;
  man.shared = model.shared;
  man.seed = meta.seed;
  man.outputs["mse"] = "mse.csv";
  man.outputs["predictions"] = "predictions.txt";
  man.outputs["error_field"] = "error_field.csv";
  man.metrics["mse_total_kK2"] = rep.total;
  for (int li = 0; li < kLayerCount; ++li) {
    man.metrics[std::string("mse_") + layer_name(static_cast<Layer>(li)) + "_kK2"] =
        rep.per_layer[li];
  }
  man.metrics["fdm_steps"] = static_cast<double>(steps);
  man.wall_seconds = clock.seconds();
  write_manifest(join_path(a.out, "manifest.json"), man);
  std::printf("mse_kK2 total %.6e (shl %.6e, msr %.6e, lin %.6e)\n", rep.total, rep.per_layer[0],
              rep.per_layer[1], rep.per_layer[2]);
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"thermopinn: physics-informed networks for layered fabric heat transfer"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "OpenMP thread count (overrides THERMOPINN_THREADS)");

  FdmArgs fa;
  CLI::App* fdm = app.add_subcommand("fdm", "run the finite-difference reference solver");
  fdm->add_option("--config", fa.config, "fabric config file (key = value)");
  fdm->add_option("--steps", fa.steps, "requested time steps (raised to stability)");
  fdm->add_option("--snapshots", fa.snapshots,
                  "snapshot rows to keep (default: time segments + 1; memory scales with it)");
  fdm->add_option("--out", fa.out, "output directory")->required();

  CalibrateArgs ca;
  CLI::App* cal = app.add_subcommand("calibrate", "derive loss-balance coefficients");
  cal->add_option("--config", ca.config, "fabric config file");
  cal->add_option("--n-exp", ca.n_exp, "number of one-step experiments");
  cal->add_option("--seed", ca.seed, "base RNG seed");
  cal->add_flag("--raw", ca.raw, "work in raw SI units");
  cal->add_flag("--share-net", ca.shared, "single network shared by all layers");
  cal->add_flag("--serial", ca.serial, "use the serial reference kernels");
  cal->add_option("--alpha", ca.alpha, "fixed class-1 coefficient");
  cal->add_option("--grid-lo", ca.grid.lo, "coefficient grid lower bound");
  cal->add_option("--grid-hi", ca.grid.hi, "coefficient grid upper bound");
  cal->add_option("--grid-n", ca.grid.n, "coefficient grid points");
  cal->add_option("--out", ca.out, "output directory")->required();

  TrainArgs ta;
  CLI::App* tr = app.add_subcommand("train", "train a model preset");
  tr->add_option("--config", ta.config, "fabric config file");
  tr->add_option("--preset", ta.preset, "M1..M5");
  tr->add_option("--units", ta.units, "override: scaled | raw");
  tr->add_option("--share-net", ta.shared, "override: 0 | 1");
  tr->add_option("--balance", ta.balance, "override: auto | unit | manual");
  tr->add_option("--coeffs", ta.coeffs_path, "calibration report CSV to take coefficients from");
  tr->add_option("--alpha", ta.alpha, "class-1 coefficient (manual balance / calibration)");
  tr->add_option("--beta", ta.beta, "class-2 coefficient (manual balance)");
  tr->add_option("--gamma", ta.gamma, "class-3 coefficient (manual balance)");
  tr->add_option("--epochs", ta.epochs, "training epochs");
  tr->add_option("--seed", ta.seed, "RNG seed");
  tr->add_option("--lr", ta.lr, "Adam learning rate");
  tr->add_option("--record-every", ta.record_every, "training-log stride");
  tr->add_option("--snapshot-epochs", ta.snapshot_epochs,
                 "comma-separated epochs for gradient histograms");
  tr->add_flag("--serial", ta.serial, "use the serial reference kernels");
  tr->add_flag("--verbose", ta.verbose, "print each training record to stderr");
  tr->add_option("--fdm-steps", ta.fdm_steps, "reference solver steps");
  tr->add_option("--cal-experiments", ta.cal_experiments, "calibration experiments");
  tr->add_option("--out", ta.out, "output directory")->required();

  SweepArgs sa;
  CLI::App* sw = app.add_subcommand("sweep-time", "train across exposure horizons");
  sw->add_option("--config", sa.train.config, "fabric config file");
  sw->add_option("--preset", sa.train.preset, "M1..M5");
  sw->add_option("--horizons", sa.horizons, "comma-separated horizons in seconds");
  sw->add_option("--epochs", sa.train.epochs, "training epochs per horizon");
  sw->add_option("--seed", sa.train.seed, "RNG seed");
  sw->add_option("--lr", sa.train.lr, "Adam learning rate");
  sw->add_option("--record-every", sa.train.record_every, "training-log stride");
  sw->add_flag("--serial", sa.train.serial, "use the serial reference kernels");
  sw->add_flag("--verbose", sa.train.verbose, "print each training record to stderr");
  sw->add_option("--fdm-steps", sa.train.fdm_steps, "reference solver steps");
  sw->add_option("--cal-experiments", sa.train.cal_experiments, "calibration experiments");
  sw->add_option("--out", sa.train.out, "output directory")->required();

  EvaluateArgs ea;
  CLI::App* ev = app.add_subcommand("evaluate", "score a checkpoint against the reference solver");
  ev->add_option("--checkpoint", ea.checkpoint, "checkpoint file")->required();
  ev->add_option("--config", ea.config, "fabric config file");
  ev->add_option("--fdm-steps", ea.fdm_steps, "reference solver steps");
  ev->add_option("--out", ea.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (threads > 0) {
      apply_thread_count(threads);
    } else if (const char* env_threads = std::getenv("THERMOPINN_THREADS")) {
      apply_thread_count(static_cast<int>(parse_long(env_threads)));
    }
    if (fdm->parsed()) return cmd_fdm(fa);
    if (cal->parsed()) return cmd_calibrate(ca);
    if (tr->parsed()) return cmd_train(ta);
    if (sw->parsed()) return cmd_sweep(sa);
    if (ev->parsed()) return cmd_evaluate(ea);
    throw std::logic_error("no subcommand dispatched");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace thermopinn
