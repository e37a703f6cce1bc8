#include "thermopinn/balance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "thermopinn/util.hpp"

namespace thermopinn {

InitialStats collect_initial_stats(const EnvironmentConfig& env, const CollocationGrid& grid,
                                   int n_experiments, std::uint64_t seed, bool shared,
                                   EvalMode mode) {
  if (n_experiments < 2) throw std::invalid_argument("need at least 2 experiments");
  InitialStats stats;
  stats.n_experiments = n_experiments;
  stats.seed = seed;
  stats.shared = shared;
  stats.units = grid.units.mode;
  const BalanceCoefficients unit_coeffs{};  // 1, 1, 1
  for (int e = 0; e < n_experiments; ++e) {
    ParallelModel model = make_model(mix_seed(seed, static_cast<std::uint64_t>(e)), shared);
    ModelGradient grad(model.slot_count());
    OptimizerState opt(model.slot_count());
    composite_loss(model, grid, env, unit_coeffs, mode, &grad);
    adam_step(model, grad, opt);
    const CompositeLoss after = composite_loss(model, grid, env, unit_coeffs, mode, nullptr);
    for (int t = 0; t < kTermCount; ++t) stats.term_mean[t] += after.unscaled[t];
  }
  for (double& v : stats.term_mean) v /= n_experiments;
  stats.class_range = class_ranges(stats.term_mean);
  return stats;
}

std::array<Interval, 3> class_ranges(const std::array<double, kTermCount>& term_mean) {
  std::array<Interval, 3> out;
  for (int cls = 1; cls <= 3; ++cls) {
    double lo = 0, hi = 0;
    bool first = true;
    for (int t = 0; t < kTermCount; ++t) {
      if (loss_class(kAllTerms[t]) != cls) continue;
      const double v = term_mean[t];
      // Terms that are structurally zero (e.g. value continuity under one
      // shared parameter set) carry no balancing information.
      if (v == 0.0) continue;
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
    out[cls - 1] = {lo, hi};
  }
  return out;
}

double interval_iou(const Interval& a, const Interval& b) {
  if (a.second < a.first || b.second < b.first) throw std::invalid_argument("malformed interval");
  const double inter = std::min(a.second, b.second) - std::max(a.first, b.first);
  const double hull = std::max(a.second, b.second) - std::min(a.first, b.first);
  if (hull <= 0) return 1.0;  // two coincident points
  return inter > 0 ? inter / hull : 0.0;
}

Interval scaled_range(const Interval& r, double k) {
  return {k * k * r.first, k * k * r.second};
}

double apply_balance(TermId id, double residual, const BalanceCoefficients& coeffs) {
  return coeffs.for_term(id) * residual;
}

namespace {

double grid_point(const SearchGrid& g, int i) {
  if (g.n == 1) return g.lo;
  const double f = static_cast<double>(i) / (g.n - 1);
  return g.lo * std::pow(g.hi / g.lo, f);
}

// Argmax of iou(base, k^2 * target) over the grid; ties go to the larger k,
// so scan ascending and accept >=.
int best_index(const Interval& base, const Interval& target, const SearchGrid& g,
               std::vector<std::array<double, 3>>* scan, int scan_col) {
  int best = 0;
  double best_iou = -1;
  for (int i = 0; i < g.n; ++i) {
    const double k = grid_point(g, i);
    const double iou = interval_iou(base, scaled_range(target, k));
    if (scan) {
      if (scan_col == 1) (*scan)[i][0] = k;
      (*scan)[i][static_cast<std::size_t>(scan_col)] = iou;
    }
    if (iou >= best_iou) {
      best_iou = iou;
      best = i;
    }
  }
  return best;
}

double search_coefficient(const Interval& base, const Interval& target, const SearchGrid& g,
                          std::vector<std::array<double, 3>>* scan, int scan_col,
                          double* iou_out) {
  if (!(g.lo > 0) || !(g.hi > g.lo) || g.n < 2) {
    throw std::invalid_argument("bad coefficient search grid");
  }
  const int coarse = best_index(base, target, g, scan, scan_col);
  SearchGrid fine;
  fine.lo = grid_point(g, std::max(coarse - 1, 0));
  fine.hi = grid_point(g, std::min(coarse + 1, g.n - 1));
  fine.n = g.n;
  const int refined = best_index(base, target, fine, nullptr, 0);
  const double k = grid_point(fine, refined);
  if (iou_out) *iou_out = interval_iou(base, scaled_range(target, k));
  return k;
}

}  // namespace

CalibrationResult calibrate(const std::array<Interval, 3>& ranges, double alpha,
                            const SearchGrid& grid) {
  if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
  for (const Interval& r : ranges) {
    if (!(r.first > 0) || r.second < r.first) {
      throw std::invalid_argument("class ranges must be positive intervals");
    }
  }
  CalibrationResult out;
  out.coeffs.alpha = alpha;
  out.scan.assign(static_cast<std::size_t>(grid.n), {0, 0, 0});
  const Interval base = scaled_range(ranges[0], alpha);
  out.coeffs.beta = search_coefficient(base, ranges[1], grid, &out.scan, 1, &out.iou_flux);
  out.coeffs.gamma = search_coefficient(base, ranges[2], grid, &out.scan, 2, &out.iou_interior);
  return out;
}

void write_calibration_report(const std::string& path, const InitialStats& stats,
                              const CalibrationResult& result) {
  std::ostringstream out;
  out << "key,value\n";
  out << "n_experiments," << stats.n_experiments << "\n";
  out << "seed," << stats.seed << "\n";
  out << "shared," << (stats.shared ? 1 : 0) << "\n";
  out << "units," << unit_mode_name(stats.units) << "\n";
  for (int t = 0; t < kTermCount; ++t) {
    out << "mean_" << term_name(kAllTerms[t]) << "," << format_double(stats.term_mean[t]) << "\n";
  }
  for (int t = 0; t < kTermCount; ++t) {
    out << "class_" << term_name(kAllTerms[t]) << "," << loss_class(kAllTerms[t]) << "\n";
  }
  for (int cls = 1; cls <= 3; ++cls) {
    out << "class" << cls << "_min," << format_double(stats.class_range[cls - 1].first) << "\n";
    out << "class" << cls << "_max," << format_double(stats.class_range[cls - 1].second) << "\n";
  }
  out << "alpha," << format_double(result.coeffs.alpha) << "\n";
  out << "beta," << format_double(result.coeffs.beta) << "\n";
  out << "gamma," << format_double(result.coeffs.gamma) << "\n";
  out << "iou_flux," << format_double(result.iou_flux) << "\n";
  out << "iou_interior," << format_double(result.iou_interior) << "\n";
  write_text_file(path, out.str());
}

BalanceCoefficients read_calibration_coefficients(const std::string& path) {
  BalanceCoefficients coeffs{};
  bool have_alpha = false, have_beta = false, have_gamma = false;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) continue;
    const std::string key = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    if (key == "alpha") { coeffs.alpha = parse_double(value); have_alpha = true; }
    if (key == "beta") { coeffs.beta = parse_double(value); have_beta = true; }
    if (key == "gamma") { coeffs.gamma = parse_double(value); have_gamma = true; }
  }
  if (!have_alpha || !have_beta || !have_gamma) {
    throw std::invalid_argument(path + ": missing alpha/beta/gamma rows");
  }
  if (!(coeffs.alpha > 0) || !(coeffs.beta > 0) || !(coeffs.gamma > 0)) {
    throw std::invalid_argument(path + ": coefficients must be positive");
  }
  return coeffs;
}

void write_calibration_scan(const std::string& path, const CalibrationResult& result) {
  std::ostringstream out;
  out << "k,iou_flux,iou_interior\n";
  for (const auto& row : result.scan) {
    out << format_double(row[0]) << "," << format_double(row[1]) << "," << format_double(row[2])
        << "\n";
  }
  write_text_file(path, out.str());
}

}  // namespace thermopinn
