// Explicit finite-volume reference solver for the layered slab. Vertex-
// centred nodes shared with the collocation grid; half cells at the outer
// faces carry the Robin conditions and interface nodes balance the fluxes of
// both neighbouring materials. Forward Euler in time with a positivity
// (stability) check at construction. Boundary fluxes are recorded at every
// native step so the energy bookkeeping can be audited after the run.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "thermopinn/physics.hpp"

namespace thermopinn {

inline constexpr long kDefaultFdmSteps = 200000;

// Largest stable time step for the scheme (interior, boundary and interface
// cells all considered).
double fdm_max_stable_dt(const EnvironmentConfig& env);

// At least `requested` steps, raised if needed for stability and rounded up
// to a multiple of (n_snapshots - 1) so snapshot instants land on steps.
long stable_fdm_steps(const EnvironmentConfig& env, long requested, int n_snapshots);

struct FdmResult {
  std::vector<double> x;  // all nodes, metres
  std::vector<double> t;  // snapshot times, seconds
  std::vector<double> T;  // row-major [time][node], kelvin
  double dt = 0;          // native step, seconds
  long steps = 0;         // native steps taken
  std::array<double, kLayerCount> fourier{};          // k dt / (C dx^2) per layer
  std::array<std::size_t, kLayerCount> layer_start{};  // first node of each layer
  // Boundary fluxes at every native state 0..steps (W/m^2, into the slab at
  // the gas face, out of it at the air face).
  std::vector<double> flux_in, flux_out;

  std::size_t nx() const { return x.size(); }
  std::size_t nt() const { return t.size(); }
  double at(std::size_t ti, std::size_t xi) const { return T[ti * nx() + xi]; }
};

// Throws std::domain_error if n_steps is unstable or does not divide into
// the snapshot intervals.
FdmResult solve_fdm(const EnvironmentConfig& env, long n_steps, int n_snapshots);

// Stationary limit from the series thermal resistances; temperatures at the
// given nodes, with the through-flux optionally returned.
std::vector<double> steady_state_profile(const EnvironmentConfig& env,
                                         const std::vector<double>& x_nodes, double* q_out);

// |enthalpy change - net boundary heat| as a fraction of the total absorbed
// heat; trapezoidal flux integral over the recorded traces.
double energy_balance_residual(const FdmResult& f, const EnvironmentConfig& env);

// Text field format, exact round-trip (flux traces are not persisted).
void save_field(const std::string& path, const FdmResult& f);
FdmResult load_field(const std::string& path);

// Plot-friendly long format: one row per (time, node, layer); interface nodes
// appear under both adjacent layers, matching the collocation convention.
void save_field_csv(const std::string& path, const FdmResult& f);

// Compact binary (fixed header + raw host-endian doubles, row-major) for
// fast reload of large fields. Flux traces are not persisted.
void save_field_binary(const std::string& path, const FdmResult& f);
FdmResult load_field_binary(const std::string& path);

}  // namespace thermopinn
