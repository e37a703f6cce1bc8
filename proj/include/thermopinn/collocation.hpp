// Collocation grid: uniform nodes per layer (counts from env.segments) by
// uniform time levels. Partitions follow the residual families: interior
// conduction points exclude the outer faces (those belong to the Robin
// terms), initial points take every node at t = 0, and the two interface
// partitions are shared by the matching temperature- and flux-continuity
// terms. Interface nodes appear in both adjacent layers' partitions.
#pragma once

#include <vector>

#include "thermopinn/autodiff.hpp"
#include "thermopinn/physics.hpp"
#include "thermopinn/units.hpp"

namespace thermopinn {

// Node positions for one layer in metres, endpoints exact; shared with the
// reference solver so both discretizations sit on identical coordinates.
std::vector<double> layer_nodes_m(const EnvironmentConfig& env, Layer layer);
// Time levels 0..horizon inclusive (env.segments[3] + 1 of them).
std::vector<double> grid_times(const EnvironmentConfig& env);

struct CollocationGrid {
  Units units;
  std::array<std::vector<Point>, kLayerCount> interior;  // t > 0
  std::array<std::vector<Point>, kLayerCount> initial;   // t = 0
  std::vector<Point> gas_boundary;                       // x = 0, t > 0
  std::vector<Point> air_boundary;                       // x = L, t > 0
  std::array<std::vector<Point>, 2> interfaces;          // shl/msr, msr/lin; t > 0

  const std::vector<Point>& partition(TermId id) const;
  std::size_t total_points() const;
};

CollocationGrid build_grid(const EnvironmentConfig& env, const Units& units);

}  // namespace thermopinn
