#include "helpers.hpp"
#include "mfphase/cli.hpp"
#include "mfphase/config.hpp"
#include "mfphase/errors.hpp"
#include "mfphase/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

using namespace mfp;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& toml) {
  try {
    resolve_config(parse_toml(toml));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mfphase_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("toml subset") {
    const Json j = parse_toml(R"(
# comment
title = "x # not a comment"
[model]
delta = 0.05   # trailing
k = [1, 2.5]
field.kind = "custom-table"
field.params.terms = [
  [0, 1.0, 1, 0],
  [1, -2e-1, 0, 1],
]
[numerics]
scheme = "exponential"
flag = true
)");
    CHECK(j["title"] == "x # not a comment");
    CHECK(j["model"]["delta"].get<double>() == 0.05);
    CHECK(j["model"]["k"][1].get<double>() == 2.5);
    CHECK(j["model"]["field"]["params"]["terms"][1][1].get<double>() == -0.2);
    CHECK(j["model"]["field"]["params"]["terms"][0][2].is_number_integer());
    CHECK(j["numerics"]["flag"] == true);
  }

  TEST_CASE("toml errors name the line") {
    std::string msg;
    try {
      parse_toml("a = 1\nb = \n");
    } catch (const ConfigError& e) {
      msg = e.what();
    }
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("[s]\n[s]\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("x = [1, 2\n"), ConfigError);
  }

  TEST_CASE("defaults resolve to the FitzHugh-Nagumo setting") {
    const RunConfig c = resolve_config(Json::object());
    CHECK(c.model.dimension() == 2);
    CHECK(c.model.gamma_ratio(0) == doctest::Approx(0.2));
    CHECK(c.model.field().kind == FieldKind::fitzhugh_nagumo_cutoff);
    CHECK(c.numerics.L == 30);
    CHECK(c.experiment.N == std::vector<int>{2000});
  }

  TEST_CASE("invalid values name the key path") {
    CHECK(error_of("[model]\nbogus = 1\n").find("model.bogus") != std::string::npos);
    CHECK(error_of("[model]\nk = [1.0, -1.0]\n").find("model.k[1]") != std::string::npos);
    CHECK(error_of("[numerics]\nL = \"ten\"\n").find("numerics.L") != std::string::npos);
    CHECK(error_of("[numerics]\nscheme = \"rk4\"\n").find("scheme") != std::string::npos);
    CHECK(error_of("[experiment]\nN = [0]\n").find("experiment.N") != std::string::npos);
    CHECK(error_of("[model.field]\nkind = \"constant\"\nparams.value = [1.0]\n").find("model") != std::string::npos);
    CHECK(error_of("[model.field.params]\nd = 3\n").find("model.field.params.d") != std::string::npos);
  }

  TEST_CASE("kind switch swaps the parameter defaults") {
    const RunConfig c = resolve_config(parse_toml("[model.field]\nkind = \"linear-test\"\nparams.A = [0, -1, 1, 0]\n"));
    CHECK(c.model.field().kind == FieldKind::linear_test);
    CHECK(c.model.field().matrix.size() == 4);
  }
}

TEST_SUITE("io") {
  TEST_CASE("limit-cycle artifact round trip") {
    const auto model = testutil::hopf(0.05);
    const SmoothedField field(model, 10);
    Vec g(2);
    g << 1.0, 0.0;
    const LimitCycle c = find_limit_cycle(field, g);
    const Json j = cycle_to_json(c, 0.125, model_hash_hex(model));
    const fs::path dir = scratch_dir("cycle");
    write_json_file(dir / "c.json", j);
    double tube = 0.0;
    const LimitCycle back = cycle_from_json(read_json_file(dir / "c.json"), &tube);
    CHECK(tube == 0.125);
    CHECK(back.period == c.period);
    CHECK(back.samples.size() == c.samples.size());
    CHECK((back.samples[17] - c.samples[17]).norm() == 0.0);
    CHECK((back.prc[33] - c.prc[33]).norm() == 0.0);
    CHECK((back.monodromy - c.monodromy).norm() == 0.0);
    Json broken = j;
    broken["format"] = "something-else";
    CHECK_THROWS_AS(cycle_from_json(broken), ConfigError);
  }

  TEST_CASE("periodic artifact round trip") {
    PeriodicSolutionArtifact a;
    a.period = 12.5;
    a.delta = 0.05;
    a.L = 2;
    a.anchor = Vec::Ones(2);
    a.normal = Vec::Zero(2);
    a.residual_history = {1e-2, 1e-7};
    a.residual = 1e-7;
    for (int j = 0; j < 4; ++j) {
      SpectralState s;
      s.t = j * 3.125;
      s.m = Vec::Constant(2, 0.1 * j);
      s.c.assign(9, 0.01 * j);
      a.snapshots.push_back(s);
      a.gamma.push_back(s.m);
    }
    const auto b = periodic_from_json(periodic_to_json(a, "abc"));
    CHECK(b.period == a.period);
    CHECK(b.snapshots[3].c == a.snapshots[3].c);
    CHECK((b.gamma[2] - a.gamma[2]).norm() == 0.0);
    CHECK(b.residual_history == a.residual_history);
  }

  TEST_CASE("csv writer keeps full precision") {
    CsvWriter w({"a", "b"});
    w.row({0.1, 1.0 / 3.0});
    CHECK(w.str() == "a,b\n0.10000000000000001,0.33333333333333331\n");
    CHECK_THROWS(w.row({1.0}));
  }
}

TEST_SUITE("cli") {
  TEST_CASE("exit codes") {
    const fs::path dir = scratch_dir("cli");
    SUBCASE("unknown config key -> 1") {
      const auto cfg = write_file(dir / "bad.toml", "[model]\nbogus = 1\n");
      CHECK(run_cli({"mfphase", "simulate", "--config", cfg.string(), "--out", (dir / "o").string()}) == 1);
    }
    SUBCASE("unknown flag -> 1") { CHECK(run_cli({"mfphase", "simulate", "--bogus"}) == 1); }
    SUBCASE("stable spiral -> 2") {
      const auto cfg = write_file(dir / "spiral.toml",
                                  "[model.field]\nkind = \"linear-test\"\nparams.A = [-1.0, -1.0, 1.0, -1.0]\n");
      CHECK(run_cli({"mfphase", "find-cycle", "--config", cfg.string(), "--out", (dir / "o").string()}) == 2);
    }
    SUBCASE("zero replicas -> 3") {
      const auto cfg = write_file(dir / "r0.toml", "[experiment]\nreplicas = 0\n");
      CHECK(run_cli({"mfphase", "phase-diffusion", "--config", cfg.string(), "--out", (dir / "o").string()}) == 3);
    }
    SUBCASE("under-resolved audit -> 4") {
      const auto cfg = write_file(dir / "l2.toml", "[numerics]\nL = 2\n");
      CHECK(run_cli({"mfphase", "audit-norms", "--config", cfg.string(), "--out", (dir / "o").string()}) == 4);
    }
  }

  TEST_CASE("audit-norms passes at the default truncation and writes a manifest") {
    const fs::path dir = scratch_dir("audit");
    CHECK(run_cli({"mfphase", "audit-norms", "--out", dir.string(), "--threads", "1"}) == 0);
    const Json man = read_json_file(dir / "manifest.json");
    CHECK(man["command"] == "audit-norms");
    CHECK(man["threads"] == 1);
    CHECK(man["outputs"][0] == "audit.json");
    CHECK(read_json_file(dir / "audit.json")["passed"] == true);
  }

  TEST_CASE("simulate writes per-replica traces") {
    const fs::path dir = scratch_dir("sim");
    const auto cfg = write_file(dir / "s.toml", "[experiment]\nN = [20]\nreplicas = 2\nhorizon = 0.5\n");
    CHECK(run_cli({"mfphase", "simulate", "--config", cfg.string(), "--out", (dir / "o").string(), "--seed", "9"}) == 0);
    CHECK(fs::exists(dir / "o" / "trace_N20_r1.csv"));
    CHECK(read_json_file(dir / "o" / "manifest.json")["seed"] == 9);
  }
}
