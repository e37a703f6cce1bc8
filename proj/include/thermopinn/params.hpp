// Parameter storage for the fixed network architecture: input (x, t), four
// tanh hidden layers of width 10, and one linear output unit. Each layer's
// weights are stored row-major ahead of its biases in one flat array, so
// optimizer state and gradients are plain arrays of the same shape.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "thermopinn/physics.hpp"

namespace thermopinn {

inline constexpr int kInputDim = 2;
inline constexpr int kHiddenWidth = 10;
inline constexpr int kHiddenLayers = 4;
inline constexpr int kAffineLayers = kHiddenLayers + 1;

inline constexpr std::array<int, kAffineLayers> kFanIn = {kInputDim, kHiddenWidth, kHiddenWidth,
                                                          kHiddenWidth, kHiddenWidth};
inline constexpr std::array<int, kAffineLayers> kFanOut = {kHiddenWidth, kHiddenWidth,
                                                           kHiddenWidth, kHiddenWidth, 1};

constexpr std::array<int, kAffineLayers> make_weight_offsets() {
  std::array<int, kAffineLayers> off{};
  int at = 0;
  for (int l = 0; l < kAffineLayers; ++l) {
    off[l] = at;
    at += kFanIn[l] * kFanOut[l] + kFanOut[l];
  }
  return off;
}
inline constexpr std::array<int, kAffineLayers> kWeightOffset = make_weight_offsets();

constexpr int make_param_count() {
  int at = 0;
  for (int l = 0; l < kAffineLayers; ++l) at += kFanIn[l] * kFanOut[l] + kFanOut[l];
  return at;
}
inline constexpr int kParamsPerNet = make_param_count();  // 371

struct NetworkParams {
  std::array<double, kParamsPerNet> p{};

  double* weights(int layer) { return p.data() + kWeightOffset[layer]; }
  const double* weights(int layer) const { return p.data() + kWeightOffset[layer]; }
  double* biases(int layer) { return p.data() + kWeightOffset[layer] + kFanIn[layer] * kFanOut[layer]; }
  const double* biases(int layer) const {
    return p.data() + kWeightOffset[layer] + kFanIn[layer] * kFanOut[layer];
  }
};

// He-normal weights (std = sqrt(2 / fan_in)), zero biases.
NetworkParams kaiming_init(std::uint64_t seed);

// One parameter set per fabric layer, or a single set shared by all three.
struct ParallelModel {
  std::vector<NetworkParams> nets;
  bool shared = false;

  int slot_count() const { return static_cast<int>(nets.size()); }
  std::array<int, 3> slot_of_layer() const {
    return shared ? std::array<int, 3>{0, 0, 0} : std::array<int, 3>{0, 1, 2};
  }
  const NetworkParams& for_layer(Layer l) const { return nets[slot_of_layer()[static_cast<int>(l)]]; }
};

ParallelModel make_model(std::uint64_t seed, bool shared);

struct ModelGradient {
  std::vector<std::array<double, kParamsPerNet>> nets;

  explicit ModelGradient(int slots = 0) : nets(slots) {}
  void zero();
};

// Gradient of the whole parameter vector flattened net-by-net.
std::vector<double> flatten(const ModelGradient& g);

// Picks the layer containing x_m (interfaces resolve to the left layer) and
// returns the prediction in kelvin. Throws std::out_of_range beyond the slab.
double predict_temperature(const ParallelModel& model, const EnvironmentConfig& env,
                           const Units& units, double x_m, double t_s);

struct CheckpointMeta {
  std::uint64_t seed = 0;
  UnitMode units = UnitMode::Scaled;
  std::string label;
};

void save_checkpoint(const std::string& path, const ParallelModel& model,
                     const CheckpointMeta& meta);
ParallelModel load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace thermopinn
