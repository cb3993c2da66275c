#include "mfphase/io.hpp"

#include "mfphase/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mfp {

namespace {

void check_header(const Json& j, const std::string& format) {
  if (!j.is_object() || !j.contains("format") || j["format"] != format)
    throw ConfigError("artifact is not a " + format + " file");
  if (!j.contains("version") || j["version"] != kArtifactVersion)
    throw ConfigError(format + ": unsupported artifact version");
}

Json mat_to_json(const Mat& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

Mat mat_from_json(const Json& j, int d, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) throw ConfigError(what + ": bad matrix");
  Mat m(d, d);
  for (int i = 0; i < d; ++i) m.row(i) = vec_from_json(j[i], d, what).transpose();
  return m;
}

Json vecs_to_json(const std::vector<Vec>& v) {
  Json out = Json::array();
  for (const auto& x : v) out.push_back(vec_to_json(x));
  return out;
}

std::vector<Vec> vecs_from_json(const Json& j, int d, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array");
  std::vector<Vec> out;
  for (const auto& x : j) out.push_back(vec_from_json(x, d, what));
  return out;
}

}  // namespace

Json vec_to_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vec vec_from_json(const Json& j, int d, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) throw ConfigError(what + ": bad vector length");
  Vec v(d);
  for (int i = 0; i < d; ++i) {
    if (!j[i].is_number()) throw ConfigError(what + ": non-numeric entry");
    v[i] = j[i].get<double>();
  }
  return v;
}

Json cycle_to_json(const LimitCycle& c, double tube_radius, const std::string& model_hash) {
  Json j;
  j["format"] = "mfphase.limit-cycle";
  j["version"] = kArtifactVersion;
  j["model_hash"] = model_hash;
  j["d"] = c.d;
  j["period"] = c.period;
  j["shooting_residual"] = c.shooting_residual;
  j["newton_history"] = c.newton_history;
  Json mult = Json::array();
  for (const auto& z : c.multipliers) mult.push_back({z.real(), z.imag()});
  j["multipliers"] = mult;
  j["anchor"] = vec_to_json(c.anchor);
  j["normal"] = vec_to_json(c.normal);
  j["monodromy"] = mat_to_json(c.monodromy);
  j["tube_radius"] = tube_radius;
  j["samples"] = vecs_to_json(c.samples);
  j["velocities"] = vecs_to_json(c.velocities);
  j["accelerations"] = vecs_to_json(c.accelerations);
  j["prc"] = vecs_to_json(c.prc);
  j["prc_rates"] = vecs_to_json(c.prc_rates);
  return j;
}

LimitCycle cycle_from_json(const Json& j, double* tube_radius) {
  check_header(j, "mfphase.limit-cycle");
  try {
    LimitCycle c;
    c.d = j.at("d").get<int>();
    c.period = j.at("period").get<double>();
    c.shooting_residual = j.at("shooting_residual").get<double>();
    c.newton_history = j.at("newton_history").get<std::vector<double>>();
    for (const auto& z : j.at("multipliers")) c.multipliers.emplace_back(z.at(0).get<double>(), z.at(1).get<double>());
    c.anchor = vec_from_json(j.at("anchor"), c.d, "anchor");
    c.normal = vec_from_json(j.at("normal"), c.d, "normal");
    c.monodromy = mat_from_json(j.at("monodromy"), c.d, "monodromy");
    c.samples = vecs_from_json(j.at("samples"), c.d, "samples");
    c.velocities = vecs_from_json(j.at("velocities"), c.d, "velocities");
    c.accelerations = vecs_from_json(j.at("accelerations"), c.d, "accelerations");
    c.prc = vecs_from_json(j.at("prc"), c.d, "prc");
    c.prc_rates = vecs_from_json(j.at("prc_rates"), c.d, "prc_rates");
    const std::size_t M = c.samples.size();
    if (M < 4 || c.velocities.size() != M || c.prc.size() != M || c.prc_rates.size() != M ||
        c.accelerations.size() != M)
      throw ConfigError("limit-cycle artifact: inconsistent sample counts");
    if (tube_radius) *tube_radius = j.at("tube_radius").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("limit-cycle artifact: ") + e.what());
  }
}

Json periodic_to_json(const PeriodicSolutionArtifact& a, const std::string& model_hash) {
  Json j;
  j["format"] = "mfphase.periodic-solution";
  j["version"] = kArtifactVersion;
  j["model_hash"] = model_hash;
  j["period"] = a.period;
  j["delta"] = a.delta;
  j["L"] = a.L;
  j["theta"] = a.theta;
  j["r"] = a.r;
  j["anchor"] = vec_to_json(a.anchor);
  j["normal"] = vec_to_json(a.normal);
  j["residual"] = a.residual;
  j["residual_history"] = a.residual_history;
  j["reduced_period"] = a.reduced_period;
  j["max_distance_to_reduced"] = a.max_distance_to_reduced;
  j["gamma"] = vecs_to_json(a.gamma);
  Json snaps = Json::array();
  for (const auto& s : a.snapshots) snaps.push_back({{"t", s.t}, {"m", vec_to_json(s.m)}, {"c", s.c}});
  j["snapshots"] = snaps;
  return j;
}

PeriodicSolutionArtifact periodic_from_json(const Json& j) {
  check_header(j, "mfphase.periodic-solution");
  try {
    PeriodicSolutionArtifact a;
    a.period = j.at("period").get<double>();
    a.delta = j.at("delta").get<double>();
    a.L = j.at("L").get<int>();
    a.theta = j.at("theta").get<double>();
    a.r = j.at("r").get<double>();
    const int d = static_cast<int>(j.at("anchor").size());
    a.anchor = vec_from_json(j.at("anchor"), d, "anchor");
    a.normal = vec_from_json(j.at("normal"), d, "normal");
    a.residual = j.at("residual").get<double>();
    a.residual_history = j.at("residual_history").get<std::vector<double>>();
    a.reduced_period = j.at("reduced_period").get<double>();
    a.max_distance_to_reduced = j.at("max_distance_to_reduced").get<double>();
    a.gamma = vecs_from_json(j.at("gamma"), d, "gamma");
    std::size_t modes = 1;
    for (int i = 0; i < d; ++i) modes *= static_cast<std::size_t>(a.L + 1);
    for (const auto& s : j.at("snapshots")) {
      SpectralState st;
      st.t = s.at("t").get<double>();
      st.m = vec_from_json(s.at("m"), d, "snapshot mean");
      st.c = s.at("c").get<std::vector<double>>();
      if (st.c.size() != modes) throw ConfigError("periodic-solution artifact: coefficient count mismatch");
      a.snapshots.push_back(std::move(st));
    }
    if (a.snapshots.size() != a.gamma.size() || a.snapshots.empty())
      throw ConfigError("periodic-solution artifact: inconsistent snapshot counts");
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("periodic-solution artifact: ") + e.what());
  }
}

Json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open artifact '" + p.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed JSON in '" + p.string() + "': " + e.what());
  }
}

void write_text_file(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + p.string() + "'");
}

void write_json_file(const std::filesystem::path& p, const Json& j) { write_text_file(p, j.dump(2) + "\n"); }

CsvWriter::CsvWriter(std::vector<std::string> header) : cols_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
  text_ += '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != cols_) throw RangeError("CSV row has the wrong number of columns");
  char buf[40];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    if (i) text_ += ',';
    text_ += buf;
  }
  text_ += '\n';
}

std::string CsvWriter::str() const { return text_; }

std::string model_hash_hex(const DiffusionModel& model) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(model_hash(model)));
  return buf;
}

RunManifest::RunManifest(std::string command, const RunConfig& cfg, int threads)
    : command_(std::move(command)), config_(cfg.resolved), config_hash_(fnv1a_hex(cfg.resolved.dump())),
      model_hash_(model_hash_hex(cfg.model)), threads_(threads), seed_(cfg.experiment.seed) {}

void RunManifest::add_output(const std::string& relative_path) { outputs_.push_back(relative_path); }

Json RunManifest::to_json() const {
  Json j;
  j["format"] = "mfphase.manifest";
  j["version"] = kArtifactVersion;
  j["command"] = command_;
  j["config_hash"] = config_hash_;
  j["model_hash"] = model_hash_;
  j["threads"] = threads_;
  j["seed"] = seed_;
  j["outputs"] = outputs_;
  j["results"] = extra_;
  j["config"] = config_;
  return j;
}

void RunManifest::write(const std::filesystem::path& dir) const { write_json_file(dir / "manifest.json", to_json()); }

}  // namespace mfp
