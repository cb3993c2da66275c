#pragma once

#include "mfphase/config.hpp"
#include "mfphase/galerkin.hpp"
#include "mfphase/reduced.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mfp {

inline constexpr int kArtifactVersion = 1;

Json vec_to_json(const Vec& v);
Vec vec_from_json(const Json& j, int d, const std::string& what);

// Limit cycle plus isochron tube radius; everything needed to rebuild an IsochronMap.
Json cycle_to_json(const LimitCycle& c, double tube_radius, const std::string& model_hash);
LimitCycle cycle_from_json(const Json& j, double* tube_radius = nullptr);

Json periodic_to_json(const PeriodicSolutionArtifact& a, const std::string& model_hash);
PeriodicSolutionArtifact periodic_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& p);
void write_text_file(const std::filesystem::path& p, const std::string& text);
void write_json_file(const std::filesystem::path& p, const Json& j);

// Minimal CSV writer; doubles at full precision.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<double>& values);
  std::string str() const;

 private:
  std::string text_;
  std::size_t cols_;
};

// Per-run manifest listing every file written into the output directory.
class RunManifest {
 public:
  RunManifest(std::string command, const RunConfig& cfg, int threads);
  void add_output(const std::string& relative_path);
  Json& extra() { return extra_; }
  Json to_json() const;
  void write(const std::filesystem::path& dir) const;  // dir/manifest.json

 private:
  std::string command_;
  Json config_;
  std::string config_hash_, model_hash_;
  int threads_;
  std::uint64_t seed_;
  std::vector<std::string> outputs_;
  Json extra_ = Json::object();
};

std::string model_hash_hex(const DiffusionModel& model);

}  // namespace mfp
