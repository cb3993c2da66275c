#pragma once

#include "mfphase/model.hpp"
#include "mfphase/particle.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace mfp {

using Json = nlohmann::ordered_json;

// Parses the TOML subset used by run configs: [section] / [a.b] headers, dotted keys,
// strings, numbers, booleans and (nested) arrays; '#' comments. ConfigError names the line.
Json parse_toml(const std::string& text);
Json load_toml_file(const std::string& path);

struct NumericsConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::euler_maruyama;
  int L = 30;
  int Q = 0;                 // 0 -> 2L
  double galerkin_dt = 0.05;
  double theta = 1.0;
  double r = 4.0;
  int quadrature_order = 20;  // smoothed field
  double shooting_tol = 1e-10;
  int cycle_samples = 4096;
  std::vector<double> initial_guess{1.0, 0.0};
  double picard_tol = 1e-6;
  double picard_damping = 0.5;
  int picard_max_iter = 40;
  int snapshots = 64;
  int tube_probes = 64;
  int oracle_samples = 128;
};

struct ExperimentConfig {
  std::vector<int> N{2000};
  int replicas = 100;
  double t_f = 1.0;             // rescaled time
  std::uint64_t seed = 1;
  int observations = 20;        // reported observation intervals over [0, t_f]
  double extraction_stride = 10.0;  // wall time between phase extractions (unwrapping grid)
  int bootstrap = 10000;
  int min_replicas = 30;
  double horizon = 10.0;        // wall horizon for simulate / couple
  double observe_every = 0.1;   // wall time between simulate observations
  int reference_factor = 10;    // couple: M = factor * N
  double audit_radius = 3.0;    // delta_x sweep
  int audit_points = 13;        // per axis
};

struct RunConfig {
  DiffusionModel model;
  NumericsConfig numerics;
  ExperimentConfig experiment;
  std::string output_dir = "out";
  Json resolved;  // every key with defaults materialized
};

// Validates and resolves a parsed config; unknown keys and bad values raise ConfigError with
// the key path.
RunConfig resolve_config(const Json& raw);

// The built-in FitzHugh-Nagumo setting used when no file is given.
Json default_config_json();

// FNV-1a 64-bit hash of a string, hex encoded.
std::string fnv1a_hex(const std::string& s);

}  // namespace mfp
