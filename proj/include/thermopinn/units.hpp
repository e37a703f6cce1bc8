// Working-unit conventions for the solver. In scaled mode the networks see
// space in millimetres and produce temperature in kilokelvin, which keeps
// inputs and outputs O(1); the residual weights below restore each governing
// equation to SI so that a zero residual means the same thing in either mode.
#pragma once

#include <string>

namespace thermopinn {

enum class UnitMode { Scaled, Raw };

struct Units {
  UnitMode mode = UnitMode::Scaled;
  double x_scale = 1e3;      // net input  = x_scale * x [m]
  double T_scale = 1e-3;     // net output = T_scale * T [K]
  double f_value = 1e3;      // 1/T_scale: weight restoring value terms to K
  double f_flux = 1e6;       // x_scale/T_scale: conductive-flux terms
  double f_time = 1e3;       // 1/T_scale: time-derivative terms
  double f_diffusion = 1e9;  // x_scale^2/T_scale: second-space-derivative terms

  static Units scaled();
  static Units raw();
};

double scale_coordinate(double x_m, const Units& u);
double scale_temperature(double T_K, const Units& u);
double unscale_prediction(double net_output, const Units& u);  // -> K

const char* unit_mode_name(UnitMode mode);
UnitMode unit_mode_from_name(const std::string& name);

}  // namespace thermopinn
