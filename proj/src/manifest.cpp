#include "thermopinn/manifest.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "thermopinn/util.hpp"

namespace thermopinn {

std::string manifest_config_string(const RunManifest& m) {
  std::ostringstream out;
  out << "command=" << m.command << "\n";
  out << "preset=" << m.preset << "\n";
  out << "units=" << unit_mode_name(m.units) << "\n";
  out << "shared=" << (m.shared ? 1 : 0) << "\n";
  out << "seed=" << m.seed << "\n";
  out << "epochs=" << m.epochs << "\n";
  out << "lr=" << format_double(m.lr) << "\n";
  out << "alpha=" << format_double(m.coeffs.alpha) << "\n";
  out << "beta=" << format_double(m.coeffs.beta) << "\n";
  out << "gamma=" << format_double(m.coeffs.gamma) << "\n";
  out << "mode=" << eval_mode_name(m.mode) << "\n";
  out << "environment:\n" << environment_to_string(m.env);
  return out.str();
}

std::string manifest_hash(const RunManifest& m) {
  return hex64(fnv1a(manifest_config_string(m)));
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["preset"] = m.preset;
  j["version"] = kToolVersion;
  j["config_hash"] = manifest_hash(m);
  j["units"] = unit_mode_name(m.units);
  j["shared_network"] = m.shared;
  j["seed"] = m.seed;
  j["epochs"] = m.epochs;
  j["lr"] = m.lr;
  j["coefficients"] = {
      {"alpha", m.coeffs.alpha}, {"beta", m.coeffs.beta}, {"gamma", m.coeffs.gamma}};
  j["mode"] = eval_mode_name(m.mode);
  j["threads"] = m.threads;
  j["wall_seconds"] = m.wall_seconds;
  nlohmann::json env;
  for (int li = 0; li < kLayerCount; ++li) {
    const FabricLayer& f = m.env.layers[li];
    env[layer_name(static_cast<Layer>(li))] = {{"density", f.density},
                                               {"specific_heat", f.specific_heat},
                                               {"conductivity", f.conductivity},
                                               {"thickness_m", f.thickness}};
  }
  env["T0_K"] = m.env.T0;
  env["Tg_K"] = m.env.Tg;
  env["h_g"] = m.env.h_gas;
  env["h_air"] = m.env.h_air;
  env["horizon_s"] = m.env.horizon;
  env["segments"] = m.env.segments;
  if (m.env.fdm_steps) env["fdm_steps"] = *m.env.fdm_steps;
  j["environment"] = env;
  j["outputs"] = m.outputs;
  j["metrics"] = m.metrics;
  return j.dump(2) + "\n";
}

void write_manifest(const std::string& path, const RunManifest& m) {
  write_text_file(path, manifest_to_json(m));
}

}  // namespace thermopinn
