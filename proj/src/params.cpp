#include "thermopinn/params.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "thermopinn/autodiff.hpp"
#include "thermopinn/util.hpp"

namespace thermopinn {

NetworkParams kaiming_init(std::uint64_t seed) {
  NetworkParams net;
  NormalSampler normal(seed);
  for (int l = 0; l < kAffineLayers; ++l) {
    const double std_dev = std::sqrt(2.0 / kFanIn[l]);
    double* w = net.weights(l);
    for (int i = 0; i < kFanIn[l] * kFanOut[l]; ++i) w[i] = std_dev * normal.next();
    double* b = net.biases(l);
    for (int i = 0; i < kFanOut[l]; ++i) b[i] = 0.0;
  }
  return net;
}

ParallelModel make_model(std::uint64_t seed, bool shared) {
  ParallelModel model;
  model.shared = shared;
  const int slots = shared ? 1 : kLayerCount;
  model.nets.reserve(slots);
  for (int s = 0; s < slots; ++s) model.nets.push_back(kaiming_init(mix_seed(seed, s)));
  return model;
}

void ModelGradient::zero() {
  for (auto& net : nets) net.fill(0.0);
}

std::vector<double> flatten(const ModelGradient& g) {
  std::vector<double> out;
  out.reserve(g.nets.size() * kParamsPerNet);
  for (const auto& net : g.nets) out.insert(out.end(), net.begin(), net.end());
  return out;
}

double predict_temperature(const ParallelModel& model, const EnvironmentConfig& env,
                           const Units& units, double x_m, double t_s) {
  const double slack = 1e-12 * env.total_thickness();
  if (x_m < -slack || x_m > env.total_thickness() + slack) {
    throw std::out_of_range("x = " + format_double(x_m) + " m is outside the fabric slab");
  }
  Layer which = Layer::Liner;
  for (int i = 0; i < kLayerCount; ++i) {
    if (x_m <= env.x_right(static_cast<Layer>(i)) + slack) {
      which = static_cast<Layer>(i);
      break;
    }
  }
  const DualState out = forward_augmented(model.for_layer(which), scale_coordinate(x_m, units), t_s);
  return unscale_prediction(out.v, units);
}

void save_checkpoint(const std::string& path, const ParallelModel& model,
                     const CheckpointMeta& meta) {
  std::ostringstream out;
  out << "thermopinn-checkpoint v1\n";
  out << "nets " << model.nets.size() << " shared " << (model.shared ? 1 : 0) << "\n";
  out << "arch " << kInputDim;
  for (int l = 0; l < kHiddenLayers; ++l) out << " " << kHiddenWidth;
  out << " 1\n";
  out << "units " << unit_mode_name(meta.units) << "\n";
  out << "seed " << meta.seed << "\n";
  out << "label " << (meta.label.empty() ? "-" : meta.label) << "\n";
  out << "params\n";
  for (const NetworkParams& net : model.nets) {
    for (double v : net.p) out << format_double(v) << "\n";
  }
  write_text_file(path, out.str());
}

ParallelModel load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::istringstream in(read_text_file(path));
  std::string line;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw std::runtime_error("truncated checkpoint: " + path);
    return line;
  };
  if (next_line() != "thermopinn-checkpoint v1") {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  std::vector<std::string> f = split_ws(next_line());
  if (f.size() != 4 || f[0] != "nets" || f[2] != "shared") {
    throw std::runtime_error("bad checkpoint header: " + path);
  }
  const long nets = parse_long(f[1]);
  const bool shared = parse_long(f[3]) != 0;
  if (nets < 1 || (shared && nets != 1) || (!shared && nets != kLayerCount)) {
    throw std::runtime_error("bad net count in checkpoint: " + path);
  }
  f = split_ws(next_line());
  std::ostringstream arch;
  arch << "arch " << kInputDim;
  for (int l = 0; l < kHiddenLayers; ++l) arch << " " << kHiddenWidth;
  arch << " 1";
  if (line != arch.str()) throw std::runtime_error("architecture mismatch in checkpoint: " + path);
  CheckpointMeta m;
  f = split_ws(next_line());
  if (f.size() != 2 || f[0] != "units") throw std::runtime_error("bad units line: " + path);
  m.units = unit_mode_from_name(f[1]);
  f = split_ws(next_line());
  if (f.size() != 2 || f[0] != "seed") throw std::runtime_error("bad seed line: " + path);
  m.seed = static_cast<std::uint64_t>(std::stoull(f[1]));
  f = split_ws(next_line());
  if (f.size() != 2 || f[0] != "label") throw std::runtime_error("bad label line: " + path);
  m.label = f[1] == "-" ? "" : f[1];
  if (next_line() != "params") throw std::runtime_error("missing params section: " + path);

  ParallelModel model;
  model.shared = shared;
  model.nets.resize(nets);
  for (NetworkParams& net : model.nets) {
    for (double& v : net.p) v = parse_double(next_line());
  }
  if (std::getline(in, line) && !line.empty()) {
    throw std::runtime_error("trailing data in checkpoint: " + path);
  }
  if (meta) *meta = m;
  return model;
}

}  // namespace thermopinn
