#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace thermopinn {

// FNV-1a over a byte string; used to fingerprint run configurations.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

// SplitMix64 finalizer; derives disjoint RNG sub-streams from one user seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Standard normal draws via Box-Muller on top of mt19937_64 so that results
// are reproducible across platforms for a given seed.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}
  double next();

 private:
  double uniform01();  // in (0, 1]
  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Shortest round-trippable decimal form of a double ("%.17g" trimmed).
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Strict numeric parsing helpers; throw std::invalid_argument with the
// offending text on failure.
double parse_double(const std::string& text);
long parse_long(const std::string& text);

std::vector<std::string> split_ws(const std::string& line);

}  // namespace thermopinn
