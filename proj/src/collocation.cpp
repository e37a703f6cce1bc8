#include "thermopinn/collocation.hpp"

#include <stdexcept>

namespace thermopinn {

namespace {

double lerp_node(double lo, double hi, int j, int n) {
  if (j == 0) return lo;
  if (j == n) return hi;
  return lo + (hi - lo) * (static_cast<double>(j) / n);
}

}  // namespace

std::vector<double> layer_nodes_m(const EnvironmentConfig& env, Layer layer) {
  const int n = env.segments[static_cast<int>(layer)];
  const double lo = env.x_left(layer);
  const double hi = env.x_right(layer);
  std::vector<double> x(n + 1);
  for (int j = 0; j <= n; ++j) x[j] = lerp_node(lo, hi, j, n);
  return x;
}

std::vector<double> grid_times(const EnvironmentConfig& env) {
  const int n = env.segments[3];
  std::vector<double> t(n + 1);
  for (int j = 0; j <= n; ++j) t[j] = lerp_node(0.0, env.horizon, j, n);
  return t;
}

const std::vector<Point>& CollocationGrid::partition(TermId id) const {
  switch (id) {
    case TermId::RShl: return interior[0];
    case TermId::RMsr: return interior[1];
    case TermId::RLin: return interior[2];
    case TermId::OShl: return initial[0];
    case TermId::OMsr: return initial[1];
    case TermId::OLin: return initial[2];
    case TermId::BShl: return gas_boundary;
    case TermId::BLin: return air_boundary;
    case TermId::B1ShlMsr:
    case TermId::B2ShlMsr: return interfaces[0];
    case TermId::B1MsrLin:
    case TermId::B2MsrLin: return interfaces[1];
  }
  throw std::invalid_argument("bad term id");
}

std::size_t CollocationGrid::total_points() const {
  std::size_t n = gas_boundary.size() + air_boundary.size();
  for (int i = 0; i < kLayerCount; ++i) n += interior[i].size() + initial[i].size();
  n += interfaces[0].size() + interfaces[1].size();
  return n;
}

CollocationGrid build_grid(const EnvironmentConfig& env, const Units& units) {
  env.validate();
  CollocationGrid g;
  g.units = units;
  const std::vector<double> times = grid_times(env);
  const int nt = env.segments[3];

  for (int li = 0; li < kLayerCount; ++li) {
    const Layer layer = static_cast<Layer>(li);
    const std::vector<double> nodes = layer_nodes_m(env, layer);
    const int n = env.segments[li];
    // The exposed face belongs to the gas Robin term and the skin-side face
    // to the air Robin term; everything else carries the conduction residual.
    const int j_lo = layer == Layer::Shell ? 1 : 0;
    const int j_hi = layer == Layer::Liner ? n - 1 : n;

    auto& inter = g.interior[li];
    inter.reserve(static_cast<std::size_t>(j_hi - j_lo + 1) * nt);
    for (int j = j_lo; j <= j_hi; ++j) {
      const double x = scale_coordinate(nodes[j], units);
      for (int s = 1; s <= nt; ++s) inter.push_back({x, times[s]});
    }

    auto& init = g.initial[li];
    init.reserve(nodes.size());
    for (double xm : nodes) init.push_back({scale_coordinate(xm, units), 0.0});
  }

  g.gas_boundary.reserve(nt);
  g.air_boundary.reserve(nt);
  const double x_gas = scale_coordinate(0.0, units);
  const double x_air = scale_coordinate(env.x_right(Layer::Liner), units);
  const double x_if0 = scale_coordinate(env.x_right(Layer::Shell), units);
  const double x_if1 = scale_coordinate(env.x_right(Layer::Barrier), units);
  for (int s = 1; s <= nt; ++s) {
    g.gas_boundary.push_back({x_gas, times[s]});
    g.air_boundary.push_back({x_air, times[s]});
    g.interfaces[0].push_back({x_if0, times[s]});
    g.interfaces[1].push_back({x_if1, times[s]});
  }
  return g;
}

}  // namespace thermopinn
