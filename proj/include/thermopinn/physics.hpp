// Material description of the three-layer protective fabric and the twelve
// residual families that define the training problem: one heat-conduction
// residual per layer, one initial-condition term per layer, the two outer
// Robin boundaries, and temperature/flux continuity at each internal
// interface. Every residual is affine in the network output and its tracked
// derivatives, which TermCoeffs captures for the evaluation kernels.
#pragma once

#include <array>
#include <optional>
#include <string>

#include "thermopinn/units.hpp"

namespace thermopinn {

enum class Layer : int { Shell = 0, Barrier = 1, Liner = 2 };
inline constexpr int kLayerCount = 3;

const char* layer_name(Layer layer);  // "shl" | "msr" | "lin"
Layer layer_from_name(const std::string& name);

struct FabricLayer {
  double density = 0;        // kg/m^3
  double specific_heat = 0;  // J/(kg K)
  double conductivity = 0;   // W/(m K)
  double thickness = 0;      // m
  double volumetric_heat_capacity() const { return density * specific_heat; }
};

struct EnvironmentConfig {
  std::array<FabricLayer, kLayerCount> layers{};
  double T0 = 310.15;     // initial / ambient temperature, K
  double Tg = 2000.0;     // hot-gas temperature at the exposed face, K
  double h_gas = 40.0;    // convection coefficient, exposed face, W/(m^2 K)
  double h_air = 9.496;   // convection coefficient, skin-side air gap, W/(m^2 K)
  double horizon = 60.0;  // simulated exposure time, s
  // Spatial segments per layer plus time segments for the collocation grid.
  std::array<int, 4> segments{50, 70, 200, 300};
  std::optional<long> fdm_steps;  // reference-solver step override

  const FabricLayer& layer(Layer l) const { return layers[static_cast<int>(l)]; }
  double x_left(Layer l) const;
  double x_right(Layer l) const;
  double total_thickness() const;
  void validate() const;  // throws std::invalid_argument on bad values
};

// Benchmark fabric: shell / moisture barrier / thermal liner.
EnvironmentConfig default_environment();
EnvironmentConfig parse_environment(const std::string& text);
EnvironmentConfig load_environment(const std::string& path);
// Canonical key=value form; parse(to_string(env)) == env exactly.
std::string environment_to_string(const EnvironmentConfig& env);

// ---- residual terms ----

enum class TermId : int {
  RShl,      // conduction residual, shell interior
  RMsr,      // conduction residual, moisture barrier interior
  RLin,      // conduction residual, liner interior
  OShl,      // initial condition, shell
  OMsr,      // initial condition, moisture barrier
  OLin,      // initial condition, liner
  BShl,      // Robin balance at the exposed (gas) face
  BLin,      // Robin balance at the skin-side (air) face
  B1ShlMsr,  // temperature continuity, shell/barrier interface
  B2ShlMsr,  // heat-flux continuity, shell/barrier interface
  B1MsrLin,  // temperature continuity, barrier/liner interface
  B2MsrLin,  // heat-flux continuity, barrier/liner interface
};
inline constexpr int kTermCount = 12;
inline constexpr std::array<TermId, kTermCount> kAllTerms = {
    TermId::RShl, TermId::RMsr, TermId::RLin,      TermId::OShl,
    TermId::OMsr, TermId::OLin, TermId::BShl,      TermId::BLin,
    TermId::B1ShlMsr, TermId::B2ShlMsr, TermId::B1MsrLin, TermId::B2MsrLin};

const char* term_name(TermId id);
TermId term_from_name(const std::string& name);
// Loss classes: 1 = value constraints (initial + temperature continuity),
// 2 = flux constraints (outer Robin + flux continuity), 3 = interior PDE.
int loss_class(TermId id);

// Network output and its tracked input derivatives at one point.
struct DualState {
  double v = 0;    // value
  double dx = 0;   // d/dx
  double dt = 0;   // d/dt
  double dxx = 0;  // d2/dx2
};

// Scalar reference forms of the residuals (units: W/m^3 for interior terms,
// W/m^2 for flux terms, K for value terms, regardless of UnitMode).
double interior_residual(const FabricLayer& layer, const DualState& s, const Units& u);
double initial_residual(double T0_K, const DualState& s, const Units& u);
double gas_boundary_residual(const EnvironmentConfig& env, const DualState& s, const Units& u);
double air_boundary_residual(const EnvironmentConfig& env, const DualState& s, const Units& u);
double interface_value_residual(const DualState& left, const DualState& right, const Units& u);
double interface_flux_residual(double k_left, double k_right, const DualState& left,
                               const DualState& right, const Units& u);

// Affine representation: residual = c0 + sum over referenced parameter slots
// of (wv*v + wx*dx + wt*dt + wxx*dxx). Interface terms reference two slots;
// when both map to the same slot (shared network) the weights are merged.
struct NetTermWeight {
  int slot = 0;
  double wv = 0, wx = 0, wt = 0, wxx = 0;
};
struct TermCoeffs {
  double c0 = 0;
  int nets = 0;
  std::array<NetTermWeight, 2> w{};
};

TermCoeffs term_coefficients(TermId id, const EnvironmentConfig& env, const Units& u,
                             const std::array<int, 3>& slot_of_layer);
double residual_from_coeffs(const TermCoeffs& c, const std::array<DualState, 2>& outs);

}  // namespace thermopinn
