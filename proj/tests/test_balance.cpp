#include <stdexcept>
#include <cmath>
#include <cstdio>

#include <doctest.h>

#include "thermopinn/balance.hpp"
#include "thermopinn/util.hpp"

using namespace thermopinn;

namespace {

EnvironmentConfig tiny_env() {
  EnvironmentConfig env = default_environment();
  env.horizon = 2.0;
  env.segments = {4, 5, 6, 8};
  return env;
}

// Published single-step loss statistics: class member means and the ranges
// they span, used as a fixed calibration input.
constexpr Interval kC1{6.24e5, 1.42e6};
constexpr Interval kC2{1.14e8, 8.65e9};
constexpr Interval kC3{6.36e14, 6.28e16};

}  // namespace

TEST_CASE("interval IOU basics") {
  CHECK(interval_iou({1, 2}, {1, 2}) == 1.0);
  CHECK(interval_iou({1, 2}, {3, 4}) == 0.0);
  CHECK(interval_iou({0, 4}, {1, 3}) == doctest::Approx(0.5));
  CHECK(interval_iou({1, 1}, {1, 1}) == 1.0);  // coincident points
  CHECK(interval_iou({0, 2}, {1, 3}) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(interval_iou({2, 1}, {0, 1}), std::invalid_argument);
}

TEST_CASE("IOU of the published ranges at the published coefficient") {
  // alpha-scaled class 1 vs beta^2-scaled class 2 at beta = 1.27e-4
  const Interval base = scaled_range(kC1, 1e-2);
  CHECK(base.first == doctest::Approx(62.4).epsilon(1e-12));
  CHECK(base.second == doctest::Approx(142.0).epsilon(1e-12));
  const double iou = interval_iou(base, scaled_range(kC2, 1.27e-4));
  CHECK(iou == doctest::Approx(0.550193621928177).epsilon(1e-12));
}

TEST_CASE("scaled_range applies the squared coefficient") {
  const Interval r = scaled_range({2.0, 8.0}, 0.5);
  CHECK(r.first == 0.5);
  CHECK(r.second == 2.0);
}

TEST_CASE("apply_balance picks the class coefficient") {
  const BalanceCoefficients c{1e-2, 1e-4, 1e-8};
  CHECK(apply_balance(TermId::OShl, 3.0, c) == doctest::Approx(3e-2));
  CHECK(apply_balance(TermId::B1MsrLin, 3.0, c) == doctest::Approx(3e-2));
  CHECK(apply_balance(TermId::BShl, 3.0, c) == doctest::Approx(3e-4));
  CHECK(apply_balance(TermId::B2ShlMsr, 3.0, c) == doctest::Approx(3e-4));
  CHECK(apply_balance(TermId::RLin, 3.0, c) == doctest::Approx(3e-8));
}

TEST_CASE("calibration against the published ranges lands on the upper-edge alignment") {
  // The IOU argmax aligns the scaled upper edges: k = alpha * sqrt(hi1/hi_c),
  // because base.hi < scaled.hi costs hull while base.hi > scaled.hi costs
  // intersection faster on these widths.
  const double alpha = 1e-2;
  const double beta_cf = alpha * std::sqrt(kC1.second / kC2.second);
  const double gamma_cf = alpha * std::sqrt(kC1.second / kC3.second);
  CHECK(beta_cf == doctest::Approx(1.2812566086111817e-4).epsilon(1e-12));
  CHECK(gamma_cf == doctest::Approx(4.7551514137988144e-8).epsilon(1e-12));

  const SearchGrid grid{};  // 1e-9 .. 1, 400 points
  const CalibrationResult cal = calibrate({kC1, kC2, kC3}, alpha, grid);
  CHECK(cal.coeffs.alpha == alpha);

  const double step = std::pow(grid.hi / grid.lo, 1.0 / (grid.n - 1));  // ~1.0533
  CHECK(cal.coeffs.beta / beta_cf < step);
  CHECK(beta_cf / cal.coeffs.beta < step);
  CHECK(cal.coeffs.gamma / gamma_cf < step);
  CHECK(gamma_cf / cal.coeffs.gamma < step);

  CHECK(cal.iou_flux > 0.5);
  CHECK(cal.iou_interior > 0.5);
  REQUIRE(cal.scan.size() == 400);
  CHECK(cal.scan.front()[0] == doctest::Approx(1e-9));
  CHECK(cal.scan.back()[0] == doctest::Approx(1.0));

  // scan rows hold the coarse IOU curves; the reported optimum cannot be
  // worse than any coarse row
  for (const auto& row : cal.scan) {
    CHECK(cal.iou_flux >= row[1] - 1e-12);
    CHECK(cal.iou_interior >= row[2] - 1e-12);
  }
}

TEST_CASE("coefficient ties resolve to the larger value") {
  // base [1,2]; target [0.5,5.5]: k = 1 gives IOU (2-1)/(5.5-0.5) = 1/5 and
  // k = 0.5 scales the target by 0.25 to [0.125,1.375], giving
  // (1.375-1)/(2-0.125) = 0.375/1.875 = 1/5. Every endpoint is dyadic, so
  // both quotients round to the same double and the tie is exact.
  const Interval c1{1.0, 2.0};
  const Interval target{0.5, 5.5};
  SearchGrid grid;
  grid.lo = 0.5;
  grid.hi = 1.0;
  grid.n = 2;
  CHECK(interval_iou(c1, scaled_range(target, 0.5)) ==
        interval_iou(c1, scaled_range(target, 1.0)));
  const CalibrationResult cal = calibrate({c1, target, target}, 1.0, grid);
  CHECK(cal.coeffs.beta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cal.coeffs.gamma == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cal.iou_flux == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("calibration input validation") {
  CHECK_THROWS_AS(calibrate({kC1, kC2, kC3}, 0.0, SearchGrid{}), std::invalid_argument);
  CHECK_THROWS_AS(calibrate({Interval{0.0, 1.0}, kC2, kC3}, 1e-2, SearchGrid{}),
                  std::invalid_argument);
  SearchGrid bad;
  bad.lo = 1.0;
  bad.hi = 0.5;
  CHECK_THROWS_AS(calibrate({kC1, kC2, kC3}, 1e-2, bad), std::invalid_argument);
}

TEST_CASE("one-step statistics are reproducible and positive") {
  const EnvironmentConfig env = tiny_env();
  const CollocationGrid grid = build_grid(env, Units::scaled());
  const InitialStats a = collect_initial_stats(env, grid, 3, 5, false, EvalMode::Parallel);
  const InitialStats b = collect_initial_stats(env, grid, 3, 5, false, EvalMode::Parallel);
  const InitialStats c = collect_initial_stats(env, grid, 3, 6, false, EvalMode::Parallel);
  CHECK(a.term_mean == b.term_mean);
  CHECK(a.term_mean != c.term_mean);
  for (double v : a.term_mean) CHECK(v > 0.0);

  // ranges are consistent with the member means
  const auto ranges = class_ranges(a.term_mean);
  CHECK(ranges == a.class_range);
  for (const Interval& r : ranges) {
    CHECK(r.first > 0.0);
    CHECK(r.second >= r.first);
  }
  // class 3 (interior, scaled units) dwarfs class 1 (value terms)
  CHECK(a.class_range[2].first > a.class_range[0].second);
}

TEST_CASE("shared-net statistics: structural zeros drop out of the ranges") {
  const EnvironmentConfig env = tiny_env();
  const CollocationGrid grid = build_grid(env, Units::scaled());
  const InitialStats s = collect_initial_stats(env, grid, 2, 5, true, EvalMode::Parallel);
  // one shared parameter set satisfies value continuity identically
  CHECK(s.term_mean[static_cast<int>(TermId::B1ShlMsr)] == 0.0);
  CHECK(s.term_mean[static_cast<int>(TermId::B1MsrLin)] == 0.0);
  // the class-1 range must come from the nonzero members only
  CHECK(s.class_range[0].first > 0.0);
  // and calibration on these statistics must be possible
  CHECK_NOTHROW(calibrate(s.class_range, 1e-2, SearchGrid{}));
}

TEST_CASE("single-experiment statistics are rejected") {
  const EnvironmentConfig env = tiny_env();
  const CollocationGrid grid = build_grid(env, Units::scaled());
  CHECK_THROWS_AS(collect_initial_stats(env, grid, 1, 5, false, EvalMode::Parallel),
                  std::invalid_argument);
}

TEST_CASE("calibration report files round-trip the coefficients") {
  const EnvironmentConfig env = tiny_env();
  const CollocationGrid grid = build_grid(env, Units::scaled());
  const InitialStats s = collect_initial_stats(env, grid, 2, 5, false, EvalMode::Parallel);
  const CalibrationResult cal = calibrate(s.class_range, 1e-2, SearchGrid{});
  write_calibration_report("/tmp/thermopinn_cal_report.csv", s, cal);
  write_calibration_scan("/tmp/thermopinn_cal_scan.csv", cal);

  const std::string report = read_text_file("/tmp/thermopinn_cal_report.csv");
  CHECK(report.find("key,value\n") == 0);
  CHECK(report.find("mean_r_shl,") != std::string::npos);
  CHECK(report.find("beta,") != std::string::npos);
  // every term is labelled with its loss class
  CHECK(report.find("class_o_msr,1\n") != std::string::npos);
  CHECK(report.find("class_b1_shl_msr,1\n") != std::string::npos);
  CHECK(report.find("class_b_shl,2\n") != std::string::npos);
  CHECK(report.find("class_b2_msr_lin,2\n") != std::string::npos);
  CHECK(report.find("class_r_shl,3\n") != std::string::npos);
  const std::string scan = read_text_file("/tmp/thermopinn_cal_scan.csv");
  CHECK(scan.find("k,iou_flux,iou_interior\n") == 0);

  const BalanceCoefficients back = read_calibration_coefficients("/tmp/thermopinn_cal_report.csv");
  CHECK(back.alpha == cal.coeffs.alpha);
  CHECK(back.beta == cal.coeffs.beta);
  CHECK(back.gamma == cal.coeffs.gamma);

  write_text_file("/tmp/thermopinn_cal_bad.csv", "key,value\nalpha,0.01\nbeta,1e-4\n");
  CHECK_THROWS_AS(read_calibration_coefficients("/tmp/thermopinn_cal_bad.csv"),
                  std::invalid_argument);
}
