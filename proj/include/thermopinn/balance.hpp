// Loss balancing. Freshly initialized models are trained for exactly one
// optimizer step and the per-term mean-square residuals are averaged over
// many such experiments; the three loss classes then get multiplicative
// coefficients (applied to residuals before squaring) chosen to maximize the
// interval IOU between the value-constraint class and each other class on a
// log-spaced coefficient grid with one refinement pass.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "thermopinn/collocation.hpp"
#include "thermopinn/physics.hpp"
#include "thermopinn/trainer.hpp"

namespace thermopinn {

using Interval = std::pair<double, double>;

struct InitialStats {
  int n_experiments = 0;
  std::uint64_t seed = 0;
  bool shared = false;
  UnitMode units = UnitMode::Scaled;
  std::array<double, kTermCount> term_mean{};  // unscaled loss after one step
  std::array<Interval, 3> class_range{};       // classes 1..3 at index cls-1
};

InitialStats collect_initial_stats(const EnvironmentConfig& env, const CollocationGrid& grid,
                                   int n_experiments, std::uint64_t seed, bool shared,
                                   EvalMode mode);

// Ranges rebuilt from given term means (same layout as InitialStats).
std::array<Interval, 3> class_ranges(const std::array<double, kTermCount>& term_mean);

// Intersection over interval-hull union; 1.0 for two identical points.
double interval_iou(const Interval& a, const Interval& b);

// Loss interval after multiplying the class's residuals by k.
Interval scaled_range(const Interval& r, double k);

// Residual with its class coefficient applied (the quantity that is squared).
double apply_balance(TermId id, double residual, const BalanceCoefficients& coeffs);

struct SearchGrid {
  double lo = 1e-9;
  double hi = 1.0;
  int n = 400;
};

struct CalibrationResult {
  BalanceCoefficients coeffs;
  double iou_flux = 0;      // achieved between class 1 and scaled class 2
  double iou_interior = 0;  // achieved between class 1 and scaled class 3
  std::vector<std::array<double, 3>> scan;  // coarse pass rows: k, iou12, iou13
};

CalibrationResult calibrate(const std::array<Interval, 3>& ranges, double alpha,
                            const SearchGrid& grid);

void write_calibration_report(const std::string& path, const InitialStats& stats,
                              const CalibrationResult& result);
void write_calibration_scan(const std::string& path, const CalibrationResult& result);

// Reads alpha/beta/gamma back from a calibration report CSV.
BalanceCoefficients read_calibration_coefficients(const std::string& path);

}  // namespace thermopinn
