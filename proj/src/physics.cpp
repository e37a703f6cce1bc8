#include "thermopinn/physics.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "thermopinn/util.hpp"

namespace thermopinn {

Units Units::scaled() {
  Units u;
  u.mode = UnitMode::Scaled;
  u.x_scale = 1e3;
  u.T_scale = 1e-3;
  u.f_value = 1.0 / u.T_scale;
  u.f_flux = u.x_scale / u.T_scale;
  u.f_time = 1.0 / u.T_scale;
  u.f_diffusion = u.x_scale * u.x_scale / u.T_scale;
  return u;
}

Units Units::raw() {
  Units u;
  u.mode = UnitMode::Raw;
  u.x_scale = 1.0;
  u.T_scale = 1.0;
  u.f_value = 1.0;
  u.f_flux = 1.0;
  u.f_time = 1.0;
  u.f_diffusion = 1.0;
  return u;
}

double scale_coordinate(double x_m, const Units& u) { return x_m * u.x_scale; }
double scale_temperature(double T_K, const Units& u) { return T_K * u.T_scale; }
double unscale_prediction(double net_output, const Units& u) { return net_output / u.T_scale; }

const char* unit_mode_name(UnitMode mode) {
  return mode == UnitMode::Scaled ? "scaled" : "raw";
}

UnitMode unit_mode_from_name(const std::string& name) {
  if (name == "scaled") return UnitMode::Scaled;
  if (name == "raw") return UnitMode::Raw;
  throw std::invalid_argument("unknown unit mode: '" + name + "'");
}

const char* layer_name(Layer layer) {
  switch (layer) {
    case Layer::Shell: return "shl";
    case Layer::Barrier: return "msr";
    case Layer::Liner: return "lin";
  }
  throw std::invalid_argument("bad layer id");
}

Layer layer_from_name(const std::string& name) {
  for (int i = 0; i < kLayerCount; ++i) {
    if (name == layer_name(static_cast<Layer>(i))) return static_cast<Layer>(i);
  }
  throw std::invalid_argument("unknown layer: '" + name + "'");
}

double EnvironmentConfig::x_left(Layer l) const {
  double x = 0;
  for (int i = 0; i < static_cast<int>(l); ++i) x += layers[i].thickness;
  return x;
}

double EnvironmentConfig::x_right(Layer l) const {
  return x_left(l) + layer(l).thickness;
}

double EnvironmentConfig::total_thickness() const {
  return layers[0].thickness + layers[1].thickness + layers[2].thickness;
}

void EnvironmentConfig::validate() const {
  for (int i = 0; i < kLayerCount; ++i) {
    const FabricLayer& f = layers[i];
    const std::string who = layer_name(static_cast<Layer>(i));
    if (!(f.density > 0)) throw std::invalid_argument(who + ": density must be positive");
    if (!(f.specific_heat > 0)) throw std::invalid_argument(who + ": specific_heat must be positive");
    if (!(f.conductivity > 0)) throw std::invalid_argument(who + ": conductivity must be positive");
    if (!(f.thickness > 0)) throw std::invalid_argument(who + ": thickness must be positive");
  }
  if (!(T0 > 0)) throw std::invalid_argument("T0_K must be positive");
  if (!(Tg > T0)) throw std::invalid_argument("Tg_K must exceed T0_K");
  if (!(h_gas > 0)) throw std::invalid_argument("h_g must be positive");
  if (!(h_air > 0)) throw std::invalid_argument("h_air must be positive");
  if (!(horizon > 0)) throw std::invalid_argument("horizon_s must be positive");
  for (int s : segments) {
    if (s < 1) throw std::invalid_argument("segment counts must be at least 1");
  }
  if (fdm_steps && *fdm_steps < 1) throw std::invalid_argument("fdm_steps must be at least 1");
}

EnvironmentConfig default_environment() {
  EnvironmentConfig env;
  env.layers[0] = {300.0, 1377.0, 0.082, 0.6e-3};
  env.layers[1] = {862.0, 2100.0, 0.37, 0.85e-3};
  env.layers[2] = {74.2, 1726.0, 0.045, 3.6e-3};
  env.T0 = 310.15;
  env.Tg = 2000.0;
  env.h_gas = 40.0;
  env.h_air = 9.496;
  env.horizon = 60.0;
  env.segments = {50, 70, 200, 300};
  return env;
}

namespace {

constexpr const char* kLayerKeys[4] = {"density", "specific_heat", "conductivity", "thickness_mm"};

void apply_key(EnvironmentConfig& env, const std::string& key, const std::string& value) {
  for (int i = 0; i < kLayerCount; ++i) {
    const std::string prefix = std::string(layer_name(static_cast<Layer>(i))) + ".";
    if (key.rfind(prefix, 0) == 0) {
      const std::string field = key.substr(prefix.size());
      FabricLayer& f = env.layers[i];
      if (field == "density") { f.density = parse_double(value); return; }
      if (field == "specific_heat") { f.specific_heat = parse_double(value); return; }
      if (field == "conductivity") { f.conductivity = parse_double(value); return; }
      if (field == "thickness_mm") { f.thickness = parse_double(value) * 1e-3; return; }
      throw std::invalid_argument("unknown config key: '" + key + "'");
    }
  }
  if (key == "T0_K") { env.T0 = parse_double(value); return; }
  if (key == "Tg_K") { env.Tg = parse_double(value); return; }
  if (key == "h_g") { env.h_gas = parse_double(value); return; }
  if (key == "h_air") { env.h_air = parse_double(value); return; }
  if (key == "horizon_s") { env.horizon = parse_double(value); return; }
  if (key == "fdm_steps") { env.fdm_steps = parse_long(value); return; }
  if (key == "segments") {
    std::vector<std::string> parts = split_ws(value);
    if (parts.size() != 4) {
      throw std::invalid_argument("segments needs 4 values (3 spatial + time), got '" + value + "'");
    }
    for (int i = 0; i < 4; ++i) env.segments[i] = static_cast<int>(parse_long(parts[i]));
    return;
  }
  throw std::invalid_argument("unknown config key: '" + key + "'");
}

}  // namespace

EnvironmentConfig parse_environment(const std::string& text) {
  EnvironmentConfig env = default_environment();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      std::size_t b = s.find_first_not_of(" \t\r");
      std::size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key or value");
    }
    apply_key(env, key, value);
  }
  env.validate();
  return env;
}

EnvironmentConfig load_environment(const std::string& path) {
  return parse_environment(read_text_file(path));
}

namespace {

// Millimetre figure whose parse (mm * 1e-3) lands exactly on `metres`,
// preferring the shortest decimal among the candidates; without this,
// emitting thickness * 1e3 verbatim can round-trip to a neighbouring double
// and the canonical text would drift under parse/emit cycles.
std::string format_thickness_mm(double metres) {
  const double mm = metres * 1e3;
  std::string best;
  for (double cand : {mm, std::nextafter(mm, 0.0),
                      std::nextafter(mm, std::numeric_limits<double>::infinity())}) {
    if (cand * 1e-3 != metres) continue;
    std::string s = format_double(cand);
    if (best.empty() || s.size() < best.size()) best = std::move(s);
  }
  return best.empty() ? format_double(mm) : best;
}

}  // namespace

std::string environment_to_string(const EnvironmentConfig& env) {
  std::ostringstream out;
  for (int i = 0; i < kLayerCount; ++i) {
    const FabricLayer& f = env.layers[i];
    const char* who = layer_name(static_cast<Layer>(i));
    out << who << ".density = " << format_double(f.density) << "\n";
    out << who << ".specific_heat = " << format_double(f.specific_heat) << "\n";
    out << who << ".conductivity = " << format_double(f.conductivity) << "\n";
    out << who << ".thickness_mm = " << format_thickness_mm(f.thickness) << "\n";
  }
  out << "T0_K = " << format_double(env.T0) << "\n";
  out << "Tg_K = " << format_double(env.Tg) << "\n";
  out << "h_g = " << format_double(env.h_gas) << "\n";
  out << "h_air = " << format_double(env.h_air) << "\n";
  out << "horizon_s = " << format_double(env.horizon) << "\n";
  out << "segments = " << env.segments[0] << " " << env.segments[1] << " " << env.segments[2]
      << " " << env.segments[3] << "\n";
  if (env.fdm_steps) out << "fdm_steps = " << *env.fdm_steps << "\n";
  return out.str();
}

const char* term_name(TermId id) {
  switch (id) {
    case TermId::RShl: return "r_shl";
    case TermId::RMsr: return "r_msr";
    case TermId::RLin: return "r_lin";
    case TermId::OShl: return "o_shl";
    case TermId::OMsr: return "o_msr";
    case TermId::OLin: return "o_lin";
    case TermId::BShl: return "b_shl";
    case TermId::BLin: return "b_lin";
    case TermId::B1ShlMsr: return "b1_shl_msr";
    case TermId::B2ShlMsr: return "b2_shl_msr";
    case TermId::B1MsrLin: return "b1_msr_lin";
    case TermId::B2MsrLin: return "b2_msr_lin";
  }
  throw std::invalid_argument("bad term id");
}

TermId term_from_name(const std::string& name) {
  for (TermId id : kAllTerms) {
    if (name == term_name(id)) return id;
  }
  throw std::invalid_argument("unknown residual term: '" + name + "'");
}

int loss_class(TermId id) {
  switch (id) {
    case TermId::OShl:
    case TermId::OMsr:
    case TermId::OLin:
    case TermId::B1ShlMsr:
    case TermId::B1MsrLin:
      return 1;
    case TermId::BShl:
    case TermId::BLin:
    case TermId::B2ShlMsr:
    case TermId::B2MsrLin:
      return 2;
    case TermId::RShl:
    case TermId::RMsr:
    case TermId::RLin:
      return 3;
  }
  throw std::invalid_argument("bad term id");
}

double interior_residual(const FabricLayer& layer, const DualState& s, const Units& u) {
  return layer.volumetric_heat_capacity() * u.f_time * s.dt -
         layer.conductivity * u.f_diffusion * s.dxx;
}

double initial_residual(double T0_K, const DualState& s, const Units& u) {
  return u.f_value * (s.v - scale_temperature(T0_K, u));
}

double gas_boundary_residual(const EnvironmentConfig& env, const DualState& s, const Units& u) {
  return env.h_gas * u.f_value * (s.v - scale_temperature(env.Tg, u)) -
         env.layer(Layer::Shell).conductivity * u.f_flux * s.dx;
}

double air_boundary_residual(const EnvironmentConfig& env, const DualState& s, const Units& u) {
  return -env.h_air * u.f_value * (s.v - scale_temperature(env.T0, u)) -
         env.layer(Layer::Liner).conductivity * u.f_flux * s.dx;
}

double interface_value_residual(const DualState& left, const DualState& right, const Units& u) {
  return u.f_value * (left.v - right.v);
}

double interface_flux_residual(double k_left, double k_right, const DualState& left,
                               const DualState& right, const Units& u) {
  return u.f_flux * (k_left * left.dx - k_right * right.dx);
}

namespace {

// Collapses duplicate slots (shared-network models) by summing weights.
TermCoeffs pack(double c0, std::initializer_list<NetTermWeight> weights) {
  TermCoeffs c;
  c.c0 = c0;
  for (const NetTermWeight& w : weights) {
    int found = -1;
    for (int i = 0; i < c.nets; ++i) {
      if (c.w[i].slot == w.slot) found = i;
    }
    if (found < 0) {
      c.w[c.nets] = w;
      ++c.nets;
    } else {
      c.w[found].wv += w.wv;
      c.w[found].wx += w.wx;
      c.w[found].wt += w.wt;
      c.w[found].wxx += w.wxx;
    }
  }
  return c;
}

TermCoeffs interface_pair(TermId id, const EnvironmentConfig& env, const Units& u,
                          const std::array<int, 3>& slot, Layer left, Layer right) {
  const int sl = slot[static_cast<int>(left)];
  const int sr = slot[static_cast<int>(right)];
  if (id == TermId::B1ShlMsr || id == TermId::B1MsrLin) {
    return pack(0.0, {{sl, u.f_value, 0, 0, 0}, {sr, -u.f_value, 0, 0, 0}});
  }
  const double kl = env.layer(left).conductivity * u.f_flux;
  const double kr = env.layer(right).conductivity * u.f_flux;
  return pack(0.0, {{sl, 0, kl, 0, 0}, {sr, 0, -kr, 0, 0}});
}

}  // namespace

TermCoeffs term_coefficients(TermId id, const EnvironmentConfig& env, const Units& u,
                             const std::array<int, 3>& slot) {
  switch (id) {
    case TermId::RShl:
    case TermId::RMsr:
    case TermId::RLin: {
      const Layer l = static_cast<Layer>(static_cast<int>(id) - static_cast<int>(TermId::RShl));
      const FabricLayer& f = env.layer(l);
      return pack(0.0, {{slot[static_cast<int>(l)], 0, 0,
                         f.volumetric_heat_capacity() * u.f_time,
                         -f.conductivity * u.f_diffusion}});
    }
    case TermId::OShl:
    case TermId::OMsr:
    case TermId::OLin: {
      const Layer l = static_cast<Layer>(static_cast<int>(id) - static_cast<int>(TermId::OShl));
      return pack(-u.f_value * scale_temperature(env.T0, u),
                  {{slot[static_cast<int>(l)], u.f_value, 0, 0, 0}});
    }
    case TermId::BShl:
      return pack(-env.h_gas * u.f_value * scale_temperature(env.Tg, u),
                  {{slot[static_cast<int>(Layer::Shell)], env.h_gas * u.f_value,
                    -env.layer(Layer::Shell).conductivity * u.f_flux, 0, 0}});
    case TermId::BLin:
      return pack(env.h_air * u.f_value * scale_temperature(env.T0, u),
                  {{slot[static_cast<int>(Layer::Liner)], -env.h_air * u.f_value,
                    -env.layer(Layer::Liner).conductivity * u.f_flux, 0, 0}});
    case TermId::B1ShlMsr:
    case TermId::B2ShlMsr:
      return interface_pair(id, env, u, slot, Layer::Shell, Layer::Barrier);
    case TermId::B1MsrLin:
    case TermId::B2MsrLin:
      return interface_pair(id, env, u, slot, Layer::Barrier, Layer::Liner);
  }
  throw std::invalid_argument("bad term id");
}

double residual_from_coeffs(const TermCoeffs& c, const std::array<DualState, 2>& outs) {
  double r = c.c0;
  for (int i = 0; i < c.nets; ++i) {
    const NetTermWeight& w = c.w[i];
    const DualState& s = outs[i];
    r += w.wv * s.v + w.wx * s.dx + w.wt * s.dt + w.wxx * s.dxx;
  }
  return r;
}

}  // namespace thermopinn
