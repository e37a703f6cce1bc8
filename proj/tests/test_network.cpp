#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <doctest.h>

#include "thermopinn/params.hpp"
#include "thermopinn/units.hpp"
#include "thermopinn/util.hpp"

using namespace thermopinn;

TEST_CASE("parameter layout of the fixed architecture") {
  CHECK(kParamsPerNet == 371);
  CHECK(kWeightOffset == std::array<int, 5>{0, 30, 140, 250, 360});
  NetworkParams net;
  // biases sit directly after each layer's weights
  CHECK(net.biases(0) - net.p.data() == 20);
  CHECK(net.biases(4) - net.p.data() == 370);
  CHECK(net.weights(1) - net.p.data() == 30);
}

TEST_CASE("He-normal init: zero biases, layer-wise scale, reproducibility") {
  const NetworkParams a = kaiming_init(99);
  const NetworkParams b = kaiming_init(99);
  const NetworkParams c = kaiming_init(100);
  CHECK(a.p == b.p);
  CHECK(a.p != c.p);

  for (int l = 0; l < kAffineLayers; ++l) {
    for (int i = 0; i < kFanOut[l]; ++i) CHECK(a.biases(l)[i] == 0.0);
  }

  // aggregate weight statistics over many seeds, one layer at a time
  for (int l : {1, 2, 3}) {
    double sum = 0, sum2 = 0;
    long n = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const NetworkParams net = kaiming_init(seed);
      for (int i = 0; i < kFanIn[l] * kFanOut[l]; ++i) {
        sum += net.weights(l)[i];
        sum2 += net.weights(l)[i] * net.weights(l)[i];
        ++n;
      }
    }
    const double mean = sum / n;
    const double std_measured = std::sqrt(sum2 / n - mean * mean);
    const double std_expected = std::sqrt(2.0 / kFanIn[l]);
    CHECK(std::abs(mean) < 0.03);
    CHECK(std_measured == doctest::Approx(std_expected).epsilon(0.05));
  }
}

TEST_CASE("model construction: independent nets vs one shared net") {
  const ParallelModel sep = make_model(42, false);
  CHECK(sep.slot_count() == 3);
  CHECK(!sep.shared);
  CHECK(sep.slot_of_layer() == std::array<int, 3>{0, 1, 2});
  CHECK(sep.nets[0].p != sep.nets[1].p);
  CHECK(sep.nets[1].p != sep.nets[2].p);
  CHECK(&sep.for_layer(Layer::Barrier) == &sep.nets[1]);

  const ParallelModel sh = make_model(42, true);
  CHECK(sh.slot_count() == 1);
  CHECK(sh.shared);
  CHECK(sh.slot_of_layer() == std::array<int, 3>{0, 0, 0});
  CHECK(&sh.for_layer(Layer::Liner) == &sh.nets[0]);

  const ParallelModel sep2 = make_model(42, false);
  CHECK(sep2.nets[0].p == sep.nets[0].p);
}

TEST_CASE("prediction guards the slab and reports kelvin") {
  const EnvironmentConfig env = default_environment();
  const Units u = Units::scaled();
  const ParallelModel model = make_model(7, false);
  const double mid = 0.5 * env.total_thickness();
  CHECK(std::isfinite(predict_temperature(model, env, u, mid, 30.0)));
  CHECK(std::isfinite(predict_temperature(model, env, u, 0.0, 0.0)));
  CHECK(std::isfinite(predict_temperature(model, env, u, env.total_thickness(), 60.0)));
  CHECK_THROWS_AS(predict_temperature(model, env, u, -1e-3, 30.0), std::out_of_range);
  CHECK_THROWS_AS(predict_temperature(model, env, u, env.total_thickness() + 1e-3, 30.0),
                  std::out_of_range);
}

TEST_CASE("checkpoint save/load round-trips bit-exactly") {
  const std::string path = "/tmp/thermopinn_ckpt_test.txt";
  const ParallelModel model = make_model(4242, false);
  CheckpointMeta meta;
  meta.seed = 4242;
  meta.units = UnitMode::Raw;
  meta.label = "M3";
  save_checkpoint(path, model, meta);

  CheckpointMeta back_meta;
  const ParallelModel back = load_checkpoint(path, &back_meta);
  REQUIRE(back.slot_count() == 3);
  CHECK(back.shared == model.shared);
  for (int s = 0; s < 3; ++s) CHECK(back.nets[s].p == model.nets[s].p);
  CHECK(back_meta.seed == 4242);
  CHECK(back_meta.units == UnitMode::Raw);
  CHECK(back_meta.label == "M3");

  const ParallelModel shared = make_model(1, true);
  save_checkpoint(path, shared, CheckpointMeta{1, UnitMode::Scaled, ""});
  const ParallelModel shared_back = load_checkpoint(path);
  CHECK(shared_back.shared);
  CHECK(shared_back.nets[0].p == shared.nets[0].p);
}

TEST_CASE("checkpoint loader rejects malformed files") {
  const std::string path = "/tmp/thermopinn_ckpt_bad.txt";
  write_text_file(path, "not a checkpoint\n");
  CHECK_THROWS(load_checkpoint(path));

  // truncate a valid file
  const ParallelModel model = make_model(5, false);
  save_checkpoint(path, model, CheckpointMeta{});
  std::string text = read_text_file(path);
  write_text_file(path, text.substr(0, text.size() / 2));
  CHECK_THROWS(load_checkpoint(path));
  // trailing garbage
  write_text_file(path, text + "extra\n");
  CHECK_THROWS(load_checkpoint(path));
}

TEST_CASE("gradient containers") {
  ModelGradient g(2);
  g.nets[0][0] = 1.5;
  g.nets[1][370] = -2.5;
  const std::vector<double> flat = flatten(g);
  REQUIRE(flat.size() == 2u * kParamsPerNet);
  CHECK(flat[0] == 1.5);
  CHECK(flat.back() == -2.5);
  g.zero();
  CHECK(g.nets[0][0] == 0.0);
  CHECK(g.nets[1][370] == 0.0);
}
