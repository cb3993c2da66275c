#include "mfphase/config.hpp"

#include "mfphase/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mfp {

namespace {

class TomlReader {
 public:
  explicit TomlReader(const std::string& text) : s_(text) {}

  Json parse() {
    Json root = Json::object();
    std::vector<std::string> table;
    while (true) {
      skip_ws_and_comments(true);
      if (pos_ >= s_.size()) break;
      if (s_[pos_] == '[') {
        ++pos_;
        skip_inline_ws();
        table = parse_key_path();
        skip_inline_ws();
        expect(']');
        Json* t = &root;
        for (const auto& k : table) t = &descend(*t, k, true);
        if (t->is_object() && defined_tables_.count(join(table)))
          fail("table [" + join(table) + "] defined twice");
        defined_tables_.insert(join(table));
      } else {
        std::vector<std::string> key = parse_key_path();
        skip_inline_ws();
        expect('=');
        skip_inline_ws();
        Json value = parse_value();
        Json* t = &root;
        for (const auto& k : table) t = &descend(*t, k, true);
        for (std::size_t i = 0; i + 1 < key.size(); ++i) t = &descend(*t, key[i], true);
        if (t->contains(key.back())) fail("duplicate key '" + join(table, key) + "'");
        (*t)[key.back()] = std::move(value);
      }
      skip_inline_ws();
      if (pos_ < s_.size() && s_[pos_] == '#') skip_comment();
      if (pos_ < s_.size() && s_[pos_] != '\n' && s_[pos_] != '\r') fail("unexpected trailing characters");
    }
    return root;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
  std::set<std::string> defined_tables_;

  [[noreturn]] void fail(const std::string& what) const {
    int line = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i)
      if (s_[i] == '\n') ++line;
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
  }

  static std::string join(const std::vector<std::string>& a, const std::vector<std::string>& b = {}) {
    std::string out;
    for (const auto* v : {&a, &b})
      for (const auto& k : *v) out += (out.empty() ? "" : ".") + k;
    return out;
  }

  Json& descend(Json& t, const std::string& k, bool create) {
    if (!t.contains(k)) {
      if (!create) fail("missing table " + k);
      t[k] = Json::object();
    }
    Json& c = t[k];
    if (!c.is_object()) fail("key '" + k + "' is not a table");
    return c;
  }

  void skip_comment() {
    while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
  }
  void skip_inline_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  void skip_ws_and_comments(bool newlines) {
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == ' ' || c == '\t' || (newlines && (c == '\n' || c == '\r')))
        ++pos_;
      else if (c == '#')
        skip_comment();
      else
        break;
    }
  }
  void expect(char c) {
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::vector<std::string> parse_key_path() {
    std::vector<std::string> out;
    while (true) {
      skip_inline_ws();
      if (pos_ < s_.size() && s_[pos_] == '"') {
        out.push_back(parse_string());
      } else {
        const std::size_t b = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-'))
          ++pos_;
        if (b == pos_) fail("expected a key");
        out.push_back(s_.substr(b, pos_ - b));
      }
      skip_inline_ws();
      if (pos_ < s_.size() && s_[pos_] == '.') {
        ++pos_;
        continue;
      }
      return out;
    }
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\n') fail("newline in string");
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("bad escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out += c;
    }
    expect('"');
    return out;
  }

  Json parse_value() {
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return parse_string();
    if (c == '[') {
      ++pos_;
      Json arr = Json::array();
      while (true) {
        skip_ws_and_comments(true);
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return arr;
        }
        arr.push_back(parse_value());
        skip_ws_and_comments(true);
        if (pos_ < s_.size() && s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        skip_ws_and_comments(true);
        expect(']');
        return arr;
      }
    }
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return false;
    }
    const std::size_t b = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                s_[pos_] == '+' || s_[pos_] == '-' || s_[pos_] == '_'))
      ++pos_;
    std::string tok = s_.substr(b, pos_ - b);
    std::erase(tok, '_');
    if (tok.empty()) fail("expected a value");
    const bool is_int = tok.find_first_of(".eEna") == std::string::npos;
    try {
      std::size_t used = 0;
      if (is_int) {
        const long long v = std::stoll(tok, &used);
        if (used == tok.size()) return v;
      } else {
        if (tok == "inf" || tok == "+inf" || tok == "-inf" || tok == "nan") fail("non-finite number '" + tok + "'");
        const double v = std::stod(tok, &used);
        if (used == tok.size()) return v;
      }
    } catch (const std::logic_error&) {
    }
    fail("invalid value '" + tok + "'");
  }
};

// Typed access with the key path in every message.
struct Getter {
  const Json& root;

  const Json& at(const std::string& path) const {
    const Json* cur = &root;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) {
      if (!cur->is_object() || !cur->contains(part)) throw ConfigError(path + ": missing");
      cur = &(*cur)[part];
    }
    return *cur;
  }
  double number(const std::string& path) const {
    const Json& v = at(path);
    if (!v.is_number()) throw ConfigError(path + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path + ": must be finite");
    return d;
  }
  long long integer(const std::string& path) const {
    const Json& v = at(path);
    if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
    return v.get<long long>();
  }
  std::string string(const std::string& path) const {
    const Json& v = at(path);
    if (!v.is_string()) throw ConfigError(path + ": expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& path) const {
    const Json& v = at(path);
    if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(v[i].get<double>());
      if (!std::isfinite(out.back())) throw ConfigError(path + "[" + std::to_string(i) + "]: must be finite");
    }
    return out;
  }
};

// Overlays `user` onto `base`, rejecting keys that base does not know (except under free_keys).
void overlay(Json& base, const Json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected a table");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (key == "model.field.params") {
      base[it.key()] = it.value();  // kind-specific, validated below
      continue;
    }
    if (!base.contains(it.key())) throw ConfigError(key + ": unknown key");
    Json& b = base[it.key()];
    if (b.is_object()) {
      overlay(b, it.value(), key);
    } else {
      if (b.is_number() && !it.value().is_number()) throw ConfigError(key + ": expected a number");
      if (b.is_string() && !it.value().is_string()) throw ConfigError(key + ": expected a string");
      if (b.is_array() && !it.value().is_array()) throw ConfigError(key + ": expected an array");
      if (b.is_boolean() && !it.value().is_boolean()) throw ConfigError(key + ": expected a boolean");
      b = it.value();
    }
  }
}

Json default_params(FieldKind kind) {
  switch (kind) {
    case FieldKind::fitzhugh_nagumo_cutoff: return {{"a", 1.0 / 3.0}, {"b", 1.0}, {"c", 10.0}};
    case FieldKind::constant: return {{"value", Json::array()}};
    case FieldKind::linear_test: return {{"A", Json::array()}};
    case FieldKind::custom_table: return {{"terms", Json::array()}};
  }
  return Json::object();
}

}  // namespace

Json parse_toml(const std::string& text) { return TomlReader(text).parse(); }

Json load_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_toml(ss.str());
}

Json default_config_json() {
  const NumericsConfig n;
  const ExperimentConfig e;
  Json j;
  j["model"] = {{"dimension", 2},
                {"delta", 0.02},
                {"k", {1.0, 1.0}},
                {"sigma", {std::sqrt(0.2), std::sqrt(0.02)}},
                {"field",
                 {{"kind", "fitzhugh-nagumo-cutoff"},
                  {"params", default_params(FieldKind::fitzhugh_nagumo_cutoff)},
                  {"cutoff_radius", 10.0},
                  {"cutoff_profile", "exp-bump-ratio"}}}};
  j["numerics"] = {{"dt", n.dt},
                   {"scheme", to_string(n.scheme)},
                   {"L", n.L},
                   {"Q", n.Q},
                   {"galerkin_dt", n.galerkin_dt},
                   {"theta", n.theta},
                   {"r", n.r},
                   {"quadrature_order", n.quadrature_order},
                   {"shooting_tol", n.shooting_tol},
                   {"cycle_samples", n.cycle_samples},
                   {"initial_guess", n.initial_guess},
                   {"picard_tol", n.picard_tol},
                   {"picard_damping", n.picard_damping},
                   {"picard_max_iter", n.picard_max_iter},
                   {"snapshots", n.snapshots},
                   {"tube_probes", n.tube_probes},
                   {"oracle_samples", n.oracle_samples}};
  j["experiment"] = {{"N", e.N},
                     {"replicas", e.replicas},
                     {"t_f", e.t_f},
                     {"seed", e.seed},
                     {"observations", e.observations},
                     {"extraction_stride", e.extraction_stride},
                     {"bootstrap", e.bootstrap},
                     {"min_replicas", e.min_replicas},
                     {"horizon", e.horizon},
                     {"observe_every", e.observe_every},
                     {"reference_factor", e.reference_factor},
                     {"audit_radius", e.audit_radius},
                     {"audit_points", e.audit_points}};
  j["output"] = {{"dir", "out"}};
  return j;
}

RunConfig resolve_config(const Json& raw) {
  Json merged = default_config_json();
  // A kind change swaps the parameter defaults before the overlay.
  if (raw.is_object() && raw.contains("model") && raw["model"].is_object() &&
      raw["model"].contains("field") && raw["model"]["field"].is_object() &&
      raw["model"]["field"].contains("kind")) {
    const Json& k = raw["model"]["field"]["kind"];
    if (!k.is_string()) throw ConfigError("model.field.kind: expected a string");
    merged["model"]["field"]["params"] = default_params(field_kind_from_string(k.get<std::string>()));
  }
  overlay(merged, raw, "");
  const Getter g{merged};

  RunConfig cfg;
  // model
  const long long d = g.integer("model.dimension");
  if (d < 1 || d > 16) throw ConfigError("model.dimension: must lie in [1, 16]");
  const auto k = g.numbers("model.k");
  const auto sigma = g.numbers("model.sigma");
  for (std::size_t i = 0; i < k.size(); ++i)
    if (!(k[i] > 0.0)) throw ConfigError("model.k[" + std::to_string(i) + "]: must be positive");
  for (std::size_t i = 0; i < sigma.size(); ++i)
    if (!(sigma[i] >= 0.0)) throw ConfigError("model.sigma[" + std::to_string(i) + "]: must be >= 0");
  VectorFieldSpec f;
  FieldKind kind;
  try {
    kind = field_kind_from_string(g.string("model.field.kind"));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("model.field.kind: ") + e.what());
  }
  f.kind = kind;
  f.cutoff_radius = g.number("model.field.cutoff_radius");
  f.cutoff_profile = g.string("model.field.cutoff_profile");
  if (f.cutoff_profile != "exp-bump-ratio")
    throw ConfigError("model.field.cutoff_profile: only 'exp-bump-ratio' is implemented");
  const Json& params = g.at("model.field.params");
  if (!params.is_object()) throw ConfigError("model.field.params: expected a table");
  const Json allowed = default_params(kind);
  for (auto it = params.begin(); it != params.end(); ++it)
    if (!allowed.contains(it.key()))
      throw ConfigError("model.field.params." + it.key() + ": unknown key for kind " + to_string(kind));
  Json p = allowed;
  for (auto it = params.begin(); it != params.end(); ++it) p[it.key()] = it.value();
  merged["model"]["field"]["params"] = p;
  const Getter gp{merged};
  switch (kind) {
    case FieldKind::fitzhugh_nagumo_cutoff:
      f.a = gp.number("model.field.params.a");
      f.b = gp.number("model.field.params.b");
      f.c = gp.number("model.field.params.c");
      break;
    case FieldKind::constant: f.value = gp.numbers("model.field.params.value"); break;
    case FieldKind::linear_test: f.matrix = gp.numbers("model.field.params.A"); break;
    case FieldKind::custom_table: {
      const Json& terms = gp.at("model.field.params.terms");
      for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string tp = "model.field.params.terms[" + std::to_string(i) + "]";
        const Json& t = terms[i];
        if (!t.is_array() || t.size() != static_cast<std::size_t>(d) + 2)
          throw ConfigError(tp + ": expected [component, coefficient, exponent_1..exponent_d]");
        for (const auto& v : t)
          if (!v.is_number()) throw ConfigError(tp + ": entries must be numbers");
        PolynomialTerm term;
        term.component = t[0].get<int>();
        term.coefficient = t[1].get<double>();
        for (long long j = 0; j < d; ++j) term.exponents.push_back(t[j + 2].get<int>());
        f.terms.push_back(term);
      }
      break;
    }
  }
  try {
    cfg.model = DiffusionModel(static_cast<int>(d), g.number("model.delta"), DiagonalMatrix(k),
                               DiagonalMatrix(sigma, true), f);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    throw ConfigError(msg.rfind("model.", 0) == 0 ? msg : "model: " + msg);
  }

  // numerics
  auto& n = cfg.numerics;
  n.dt = g.number("numerics.dt");
  if (!(n.dt > 0.0)) throw ConfigError("numerics.dt: must be positive");
  try {
    n.scheme = scheme_from_string(g.string("numerics.scheme"));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("numerics.scheme: ") + e.what());
  }
  n.L = static_cast<int>(g.integer("numerics.L"));
  if (n.L < 1) throw ConfigError("numerics.L: must be >= 1");
  n.Q = static_cast<int>(g.integer("numerics.Q"));
  if (n.Q != 0 && n.Q < n.L + 1) throw ConfigError("numerics.Q: must be 0 (auto) or >= L + 1");
  n.galerkin_dt = g.number("numerics.galerkin_dt");
  if (!(n.galerkin_dt > 0.0)) throw ConfigError("numerics.galerkin_dt: must be positive");
  n.theta = g.number("numerics.theta");
  if (!(n.theta > 0.0)) throw ConfigError("numerics.theta: must be positive");
  n.r = g.number("numerics.r");
  if (!(n.r >= 0.0)) throw ConfigError("numerics.r: must be >= 0");
  n.quadrature_order = static_cast<int>(g.integer("numerics.quadrature_order"));
  if (n.quadrature_order < 2) throw ConfigError("numerics.quadrature_order: must be >= 2");
  n.shooting_tol = g.number("numerics.shooting_tol");
  if (!(n.shooting_tol > 0.0)) throw ConfigError("numerics.shooting_tol: must be positive");
  n.cycle_samples = static_cast<int>(g.integer("numerics.cycle_samples"));
  if (n.cycle_samples < 64) throw ConfigError("numerics.cycle_samples: must be >= 64");
  n.initial_guess = g.numbers("numerics.initial_guess");
  if (static_cast<long long>(n.initial_guess.size()) != d)
    throw ConfigError("numerics.initial_guess: length must equal model.dimension");
  n.picard_tol = g.number("numerics.picard_tol");
  if (!(n.picard_tol > 0.0)) throw ConfigError("numerics.picard_tol: must be positive");
  n.picard_damping = g.number("numerics.picard_damping");
  if (!(n.picard_damping > 0.0 && n.picard_damping <= 1.0))
    throw ConfigError("numerics.picard_damping: must lie in (0, 1]");
  n.picard_max_iter = static_cast<int>(g.integer("numerics.picard_max_iter"));
  if (n.picard_max_iter < 1) throw ConfigError("numerics.picard_max_iter: must be >= 1");
  n.snapshots = static_cast<int>(g.integer("numerics.snapshots"));
  if (n.snapshots < 4) throw ConfigError("numerics.snapshots: must be >= 4");
  n.tube_probes = static_cast<int>(g.integer("numerics.tube_probes"));
  if (n.tube_probes < 1) throw ConfigError("numerics.tube_probes: must be >= 1");
  n.oracle_samples = static_cast<int>(g.integer("numerics.oracle_samples"));
  if (n.oracle_samples < 1) throw ConfigError("numerics.oracle_samples: must be >= 1");

  // experiment
  auto& e = cfg.experiment;
  const Json& Ns = g.at("experiment.N");
  if (!Ns.is_array() || Ns.empty()) throw ConfigError("experiment.N: expected a non-empty array of integers");
  e.N.clear();
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    if (!Ns[i].is_number_integer() || Ns[i].get<long long>() < 1)
      throw ConfigError("experiment.N[" + std::to_string(i) + "]: expected a positive integer");
    e.N.push_back(Ns[i].get<int>());
  }
  e.replicas = static_cast<int>(g.integer("experiment.replicas"));
  if (e.replicas < 0) throw ConfigError("experiment.replicas: must be >= 0");
  e.t_f = g.number("experiment.t_f");
  if (!(e.t_f > 0.0)) throw ConfigError("experiment.t_f: must be positive");
  const long long seed = g.integer("experiment.seed");
  if (seed < 0) throw ConfigError("experiment.seed: must be >= 0");
  e.seed = static_cast<std::uint64_t>(seed);
  e.observations = static_cast<int>(g.integer("experiment.observations"));
  if (e.observations < 2) throw ConfigError("experiment.observations: must be >= 2");
  e.extraction_stride = g.number("experiment.extraction_stride");
  if (!(e.extraction_stride > 0.0)) throw ConfigError("experiment.extraction_stride: must be positive");
  e.bootstrap = static_cast<int>(g.integer("experiment.bootstrap"));
  if (e.bootstrap < 1) throw ConfigError("experiment.bootstrap: must be >= 1");
  e.min_replicas = static_cast<int>(g.integer("experiment.min_replicas"));
  if (e.min_replicas < 2) throw ConfigError("experiment.min_replicas: must be >= 2");
  e.horizon = g.number("experiment.horizon");
  if (!(e.horizon >= 0.0)) throw ConfigError("experiment.horizon: must be >= 0");
  e.observe_every = g.number("experiment.observe_every");
  if (!(e.observe_every > 0.0)) throw ConfigError("experiment.observe_every: must be positive");
  e.reference_factor = static_cast<int>(g.integer("experiment.reference_factor"));
  if (e.reference_factor < 1) throw ConfigError("experiment.reference_factor: must be >= 1");
  e.audit_radius = g.number("experiment.audit_radius");
  if (!(e.audit_radius > 0.0)) throw ConfigError("experiment.audit_radius: must be positive");
  e.audit_points = static_cast<int>(g.integer("experiment.audit_points"));
  if (e.audit_points < 2) throw ConfigError("experiment.audit_points: must be >= 2");

  cfg.output_dir = g.string("output.dir");
  cfg.resolved = merged;
  return cfg;
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mfp
