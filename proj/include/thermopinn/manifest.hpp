// Run manifest: one JSON document per CLI invocation recording what ran,
// with what inputs, and what came out. The config hash fingerprints only the
// result-determining inputs, so reruns of the same configuration hash alike
// regardless of wall time or thread count.
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "thermopinn/autodiff.hpp"
#include "thermopinn/physics.hpp"
#include "thermopinn/trainer.hpp"

namespace thermopinn {

inline constexpr const char* kToolVersion = "1.0.0";

struct RunManifest {
  std::string command;          // subcommand name
  std::string preset;           // "M1".."M5" or "custom"
  EnvironmentConfig env;
  UnitMode units = UnitMode::Scaled;
  bool shared = false;
  std::uint64_t seed = 0;
  long epochs = 0;
  double lr = 0;
  BalanceCoefficients coeffs{};
  EvalMode mode = EvalMode::Parallel;
  // Recorded but excluded from the hash:
  int threads = 1;
  double wall_seconds = 0;
  std::map<std::string, std::string> outputs;  // name -> path
  std::map<std::string, double> metrics;
};

// Canonical serialization of the hashed inputs.
std::string manifest_config_string(const RunManifest& m);
// FNV-1a of the canonical string, as 16 hex digits.
std::string manifest_hash(const RunManifest& m);

std::string manifest_to_json(const RunManifest& m);
void write_manifest(const std::string& path, const RunManifest& m);

}  // namespace thermopinn
