#include <stdexcept>
#include <cmath>

#include <doctest.h>

#include "oracles.hpp"
#include "thermopinn/collocation.hpp"
#include "thermopinn/trainer.hpp"

using namespace thermopinn;
using namespace thermopinn::testing;

namespace {

EnvironmentConfig tiny_env() {
  EnvironmentConfig env = default_environment();
  env.horizon = 2.0;
  env.segments = {4, 5, 6, 8};
  return env;
}

ParallelModel zero_model(bool shared = false) {
  ParallelModel m;
  m.shared = shared;
  m.nets.resize(shared ? 1 : 3);  // value-initialized: all parameters zero
  return m;
}

}  // namespace

TEST_CASE("balance coefficients map classes to alpha/beta/gamma") {
  const BalanceCoefficients c{2.0, 3.0, 5.0};
  CHECK(c.for_class(1) == 2.0);
  CHECK(c.for_class(2) == 3.0);
  CHECK(c.for_class(3) == 5.0);
  CHECK(c.for_term(TermId::OShl) == 2.0);
  CHECK(c.for_term(TermId::B2MsrLin) == 3.0);
  CHECK(c.for_term(TermId::RMsr) == 5.0);
  CHECK_THROWS_AS(c.for_class(4), std::invalid_argument);
  const BalanceCoefficients d{};
  CHECK(d.alpha == 1.0);
  CHECK(d.beta == 1.0);
  CHECK(d.gamma == 1.0);
}

TEST_CASE("composite loss of the zero model has closed-form term values") {
  // A zero parameter set outputs v = dx = dt = dxx = 0 everywhere, so every
  // term's residual is its constant part.
  const EnvironmentConfig env = default_environment();
  const CollocationGrid grid = build_grid(env, Units::scaled());
  const ParallelModel model = zero_model();
  const BalanceCoefficients coeffs{2.0, 0.5, 3.0};
  const CompositeLoss loss =
      composite_loss(model, grid, env, coeffs, EvalMode::Parallel, nullptr);

  const double o_want = 310.15 * 310.15;                        // (T0 in K)^2
  const double bshl_want = std::pow(40.0 * 2000.0, 2);          // (h_g * Tg)^2
  const double blin_want = std::pow(9.496 * 310.15, 2);         // (h_air * T0)^2
  for (TermId id : {TermId::OShl, TermId::OMsr, TermId::OLin}) {
    CHECK(loss.unscaled[static_cast<int>(id)] == doctest::Approx(o_want).epsilon(1e-12));
  }
  CHECK(loss.unscaled[static_cast<int>(TermId::BShl)] ==
        doctest::Approx(bshl_want).epsilon(1e-12));
  CHECK(loss.unscaled[static_cast<int>(TermId::BLin)] ==
        doctest::Approx(blin_want).epsilon(1e-12));
  for (TermId id : {TermId::RShl, TermId::RMsr, TermId::RLin, TermId::B1ShlMsr,
                    TermId::B2ShlMsr, TermId::B1MsrLin, TermId::B2MsrLin}) {
    CHECK(loss.unscaled[static_cast<int>(id)] == 0.0);
  }

  // scaled parts carry the squared class coefficient; the total is their sum
  double total = 0;
  for (int t = 0; t < kTermCount; ++t) {
    const double k = coeffs.for_term(kAllTerms[t]);
    CHECK(loss.scaled[t] == doctest::Approx(k * k * loss.unscaled[t]).epsilon(1e-14));
    total += loss.scaled[t];
  }
  CHECK(loss.total == doctest::Approx(total).epsilon(1e-14));
  CHECK(loss.total ==
        doctest::Approx(4.0 * 3 * o_want + 0.25 * (bshl_want + blin_want)).epsilon(1e-12));
}

TEST_CASE("composite loss is identical in raw and scaled units for the zero model") {
  const EnvironmentConfig env = default_environment();
  const ParallelModel model = zero_model();
  const CompositeLoss s = composite_loss(model, build_grid(env, Units::scaled()), env,
                                         BalanceCoefficients{}, EvalMode::Parallel, nullptr);
  const CompositeLoss r = composite_loss(model, build_grid(env, Units::raw()), env,
                                         BalanceCoefficients{}, EvalMode::Parallel, nullptr);
  for (int t = 0; t < kTermCount; ++t) {
    CHECK(s.unscaled[t] == doctest::Approx(r.unscaled[t]).epsilon(1e-12));
  }
}

TEST_CASE("composite gradient matches finite differences") {
  const EnvironmentConfig env = tiny_env();
  const CollocationGrid grid = build_grid(env, Units::scaled());
  ParallelModel model = make_model(51, false);
  const BalanceCoefficients coeffs{1e-2, 1e-4, 1e-8};

  ModelGradient grad(model.slot_count());
  composite_loss(model, grid, env, coeffs, EvalMode::Parallel, &grad);

  for (int slot : {0, 2}) {
    for (int idx : {3, 147, 365}) {
      const double eps = 1e-6;
      const double saved = model.nets[slot].p[idx];
      model.nets[slot].p[idx] = saved + eps;
      const double up =
          composite_loss(model, grid, env, coeffs, EvalMode::Parallel, nullptr).total;
      model.nets[slot].p[idx] = saved - eps;
      const double dn =
          composite_loss(model, grid, env, coeffs, EvalMode::Parallel, nullptr).total;
      model.nets[slot].p[idx] = saved;
      const double fd = (up - dn) / (2 * eps);
      CHECK(rel_err(grad.nets[slot][idx], fd, 1e-8) < 1e-5);
    }
  }
}

TEST_CASE("Adam steps follow the published update rule") {
  ParallelModel model = zero_model(true);
  model.nets[0].p[0] = 1.0;
  model.nets[0].p[1] = -2.0;
  ModelGradient g(1);
  g.nets[0][0] = 0.5;
  g.nets[0][1] = -3.0;

  AdamConfig cfg;  // lr 1e-3, betas 0.9/0.999, eps 1e-8
  OptimizerState opt(1, cfg);
  adam_step(model, g, opt);
  CHECK(opt.step == 1);

  // first step: m_hat = g, v_hat = g^2 -> update = -lr * g / (|g| + eps)
  const double d0 = cfg.lr * 0.5 / (0.5 + cfg.eps);
  const double d1 = cfg.lr * 3.0 / (3.0 + cfg.eps);
  CHECK(model.nets[0].p[0] == doctest::Approx(1.0 - d0).epsilon(1e-14));
  CHECK(model.nets[0].p[1] == doctest::Approx(-2.0 + d1).epsilon(1e-14));

  // second step with a fresh gradient, verified against the textbook recurrence
  ModelGradient g2(1);
  g2.nets[0][0] = -1.0;
  const double p_before = model.nets[0].p[0];
  adam_step(model, g2, opt);
  const double m = 0.9 * (0.1 * 0.5) + 0.1 * (-1.0);
  const double v = 0.999 * (0.001 * 0.25) + 0.001 * 1.0;
  const double m_hat = m / (1 - std::pow(0.9, 2));
  const double v_hat = v / (1 - std::pow(0.999, 2));
  const double want = p_before - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  CHECK(model.nets[0].p[0] == doctest::Approx(want).epsilon(1e-14));

  ModelGradient wrong(2);
  CHECK_THROWS_AS(adam_step(model, wrong, opt), std::invalid_argument);
}

TEST_CASE("training loop: records, snapshots, determinism") {
  const EnvironmentConfig env = tiny_env();
  const CollocationGrid grid = build_grid(env, Units::scaled());
  TrainOptions opts;
  opts.epochs = 25;
  opts.seed = 7;
  opts.record_every = 10;
  opts.snapshot_epochs = {5};
  opts.coeffs = {1e-2, 1e-4, 1e-8};

  long callbacks = 0;
  opts.on_record = [&](const TrainRecord&) { ++callbacks; };
  const TrainResult r1 = train(env, grid, opts);
  CHECK(!r1.diverged);
  CHECK(r1.stopped_at == 25);
  REQUIRE(r1.records.size() == 4);  // epochs 0, 10, 20, 25
  CHECK(r1.records[0].epoch == 0);
  CHECK(r1.records[1].epoch == 10);
  CHECK(r1.records[2].epoch == 20);
  CHECK(r1.records[3].epoch == 25);
  CHECK(callbacks == 4);
  CHECK(r1.final_loss == r1.records.back().loss.total);
  CHECK(r1.final_loss < r1.records.front().loss.total);  // it learns something

  REQUIRE(r1.snapshots.size() == 1);
  CHECK(r1.snapshots[0].epoch == 5);
  REQUIRE(r1.snapshots[0].counts.size() == 3);
  long nonzero = 0;
  for (const auto& per_layer : r1.snapshots[0].counts) {
    for (const auto& bins : per_layer) {
      for (long c : bins) {
        CHECK(c >= 0);
        nonzero += c;
      }
    }
  }
  CHECK(nonzero > 0);
  CHECK(nonzero <= 3 * kParamsPerNet);

  opts.on_record = {};
  const TrainResult r2 = train(env, grid, opts);
  CHECK(r2.final_loss == r1.final_loss);  // bitwise reproducible
  CHECK(r2.model.nets[0].p == r1.model.nets[0].p);

  TrainOptions serial = opts;
  serial.mode = EvalMode::Serial;
  serial.epochs = 10;
  TrainOptions par = opts;
  par.mode = EvalMode::Parallel;
  par.epochs = 10;
  const TrainResult rs = train(env, grid, serial);
  const TrainResult rp = train(env, grid, par);
  CHECK(rel_err(rs.final_loss, rp.final_loss) < 1e-9);
}

TEST_CASE("training aborts when the loss blows up") {
  const EnvironmentConfig env = tiny_env();
  const CollocationGrid grid = build_grid(env, Units::scaled());
  TrainOptions opts;
  opts.epochs = 50;
  opts.seed = 7;
  opts.coeffs = {1e200, 1.0, 1.0};  // alpha^2 overflows to inf
  const TrainResult r = train(env, grid, opts);
  CHECK(r.diverged);
  CHECK(r.stopped_at == 0);
  CHECK(!std::isfinite(r.final_loss));
  CHECK(r.records.back().epoch == 0);
}

TEST_CASE("gradient histogram bins by sign and decade") {
  ModelGradient g(1);
  g.zero();
  g.nets[0][0] = 1e-5;    // decade -5 -> bin 32 + 19 = 51
  g.nets[0][1] = -1e-5;   // bin 31 - 19 = 12
  g.nets[0][2] = 1.0;     // decade 0 -> bin 56
  g.nets[0][3] = -1e-30;  // clamps to decade -24 -> bin 31
  g.nets[0][4] = 1e10;    // clamps to decade +7 -> bin 63
  g.nets[0][5] = 0.0;     // not counted
  g.nets[0][140] = 1.0;   // first weight of the third affine layer

  const GradientSnapshot s = gradient_histogram(g, 17);
  CHECK(s.epoch == 17);
  REQUIRE(s.counts.size() == 1);
  CHECK(s.counts[0][0][51] == 1);
  CHECK(s.counts[0][0][12] == 1);
  CHECK(s.counts[0][0][56] == 1);
  CHECK(s.counts[0][0][31] == 1);
  CHECK(s.counts[0][0][63] == 1);
  CHECK(s.counts[0][2][56] == 1);
  long total = 0;
  for (const auto& layer : s.counts[0])
    for (long c : layer) total += c;
  CHECK(total == 6);
}

TEST_CASE("MSE vs reference: exact interpolant scores zero, 1 K offset scores 1e-6") {
  const EnvironmentConfig env = tiny_env();
  const Units u = Units::scaled();
  const ParallelModel model = make_model(77, true);  // shared: both interface sides agree

  // synthesize a reference field from the model's own predictions
  FdmResult ref;
  const auto shl = layer_nodes_m(env, Layer::Shell);
  const auto msr = layer_nodes_m(env, Layer::Barrier);
  const auto lin = layer_nodes_m(env, Layer::Liner);
  ref.x = shl;
  ref.x.insert(ref.x.end(), msr.begin() + 1, msr.end());
  ref.x.insert(ref.x.end(), lin.begin() + 1, lin.end());
  ref.t = grid_times(env);
  ref.layer_start = {0, shl.size() - 1, shl.size() + msr.size() - 2};
  ref.T.resize(ref.x.size() * ref.t.size());
  for (std::size_t ti = 0; ti < ref.t.size(); ++ti) {
    for (std::size_t xi = 0; xi < ref.x.size(); ++xi) {
      ref.T[ti * ref.x.size() + xi] = predict_temperature(model, env, u, ref.x[xi], ref.t[ti]);
    }
  }

  const MseReport zero = mse_vs_reference(model, env, u, ref);
  CHECK(zero.total == 0.0);
  for (double v : zero.per_layer) CHECK(v == 0.0);
  CHECK(zero.count[0] == shl.size() * ref.t.size());
  CHECK(zero.count[1] == msr.size() * ref.t.size());
  CHECK(zero.count[2] == lin.size() * ref.t.size());

  for (double& T : ref.T) T += 1.0;  // one kelvin everywhere
  const MseReport off = mse_vs_reference(model, env, u, ref);
  for (double v : off.per_layer) CHECK(v == doctest::Approx(1e-6).epsilon(1e-9));
  CHECK(off.total == doctest::Approx(1e-6).epsilon(1e-9));

  FdmResult bad = ref;
  bad.x[1] += 1e-6;
  CHECK_THROWS_AS(mse_vs_reference(model, env, u, bad), std::invalid_argument);
}
