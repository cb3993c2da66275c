#include "mfphase/cli.hpp"

#include "mfphase/config.hpp"
#include "mfphase/errors.hpp"
#include "mfphase/galerkin.hpp"
#include "mfphase/hermite.hpp"
#include "mfphase/io.hpp"
#include "mfphase/particle.hpp"
#include "mfphase/phase.hpp"
#include "mfphase/reduced.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <memory>
#include <random>

namespace mfp {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  long long seed = -1;
  int threads = 0;
  std::string cycle;     // existing limit-cycle artifact
  std::string periodic;  // existing periodic-solution artifact
};

RunConfig load_config(const CommonOptions& o) {
  Json raw = o.config.empty() ? Json::object() : load_toml_file(o.config);
  if (o.seed >= 0) raw["experiment"]["seed"] = o.seed;
  if (!o.out.empty()) raw["output"]["dir"] = o.out;
  return resolve_config(raw);
}

int apply_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
  return omp_get_max_threads();
}

struct CycleBundle {
  std::shared_ptr<SmoothedField> field;
  std::shared_ptr<LimitCycle> cycle;
  std::shared_ptr<IsochronMap> iso;  // sweep tolerance
};

const OdeOptions kSweepOde{1e-8, 1e-8, 1e-3, 50'000'000};
const OdeOptions kOracleOde{1e-10, 1e-10, 1e-3, 50'000'000};

CycleBundle compute_cycle(const RunConfig& cfg) {
  CycleBundle b;
  b.field = std::make_shared<SmoothedField>(cfg.model, cfg.numerics.quadrature_order);
  CycleOptions co;
  co.shooting_tolerance = cfg.numerics.shooting_tol;
  co.samples = cfg.numerics.cycle_samples;
  const Vec guess = Eigen::Map<const Vec>(cfg.numerics.initial_guess.data(), cfg.model.dimension());
  b.cycle = std::make_shared<LimitCycle>(find_limit_cycle(*b.field, guess, co));
  b.iso = std::make_shared<IsochronMap>(b.cycle, b.field, kSweepOde);
  b.iso->calibrate_tube(cfg.numerics.tube_probes);
  return b;
}

CycleBundle load_or_compute_cycle(const RunConfig& cfg, const std::string& path) {
  if (path.empty()) return compute_cycle(cfg);
  const Json j = read_json_file(path);
  if (j.value("model_hash", std::string()) != model_hash_hex(cfg.model))
    throw ConfigError("limit-cycle artifact '" + path + "' was built for a different model");
  CycleBundle b;
  double tube = 0.0;
  b.field = std::make_shared<SmoothedField>(cfg.model, cfg.numerics.quadrature_order);
  b.cycle = std::make_shared<LimitCycle>(cycle_from_json(j, &tube));
  b.iso = std::make_shared<IsochronMap>(b.cycle, b.field, kSweepOde);
  b.iso->set_tube_radius(tube);
  return b;
}

GalerkinOptions galerkin_options(const RunConfig& cfg) {
  GalerkinOptions g;
  g.L = cfg.numerics.L;
  g.Q = cfg.numerics.Q;
  g.dt = cfg.numerics.galerkin_dt;
  return g;
}

PicardOptions picard_options(const RunConfig& cfg) {
  PicardOptions p;
  p.damping = cfg.numerics.picard_damping;
  p.tolerance = cfg.numerics.picard_tol;
  p.max_iterations = cfg.numerics.picard_max_iter;
  p.snapshots = cfg.numerics.snapshots;
  p.theta = cfg.numerics.theta;
  p.r = cfg.numerics.r;
  return p;
}

PeriodicSolutionArtifact load_or_compute_periodic(const RunConfig& cfg, const CycleBundle& cb,
                                                  const std::string& path) {
  if (path.empty()) {
    const GalerkinSolver solver(cfg.model, galerkin_options(cfg));
    return find_periodic_solution(solver, *cb.cycle, picard_options(cfg));
  }
  const Json j = read_json_file(path);
  if (j.value("model_hash", std::string()) != model_hash_hex(cfg.model))
    throw ConfigError("periodic-solution artifact '" + path + "' was built for a different model");
  return periodic_from_json(j);
}

Json multipliers_json(const LimitCycle& c) {
  Json out = Json::array();
  for (const auto& z : c.multipliers) out.push_back({{"re", z.real()}, {"im", z.imag()}, {"abs", std::abs(z)}});
  return out;
}

// ---- subcommands -------------------------------------------------------------------------

int cmd_find_cycle(const CommonOptions& o, bool oracle) {
  const RunConfig cfg = load_config(o);
  const int threads = apply_threads(o.threads);
  const fs::path dir = cfg.output_dir;
  RunManifest man("find-cycle", cfg, threads);
  const CycleBundle cb = compute_cycle(cfg);
  const LimitCycle& c = *cb.cycle;
  Json art = cycle_to_json(c, cb.iso->tube_radius(), model_hash_hex(cfg.model));
  Json summary = {{"period", c.period},
                  {"multipliers", multipliers_json(c)},
                  {"shooting_residual", c.shooting_residual},
                  {"tube_radius", cb.iso->tube_radius()}};
  if (oracle && cfg.model.delta() > 0.0) {
    IsochronMap fine(cb.cycle, cb.field, kOracleOde);
    fine.set_tube_radius(cb.iso->tube_radius());
    const OracleCoefficients oc = oracle_phase_coefficients(fine, cfg.model, cfg.numerics.oracle_samples);
    const Json oj = {{"b_fd", oc.b_fd},
                     {"a2_fd", oc.a2_fd},
                     {"mean_sigma_hessian", oc.mean_sigma_hessian},
                     {"mean_sigma_gradient", oc.mean_sigma_gradient},
                     {"samples", oc.samples}};
    art["oracle"] = oj;
    summary["oracle"] = oj;
  }
  write_json_file(dir / "cycle.json", art);
  man.add_output("cycle.json");
  CsvWriter csv({"u", "alpha_1", "alpha_2", "Z_1", "Z_2"});
  if (c.d == 2) {
    for (int j = 0; j < c.size(); ++j)
      csv.row({c.period * j / c.size(), c.samples[j][0], c.samples[j][1], c.prc[j][0], c.prc[j][1]});
    write_text_file(dir / "cycle_samples.csv", csv.str());
    man.add_output("cycle_samples.csv");
  }
  man.extra() = summary;
  man.write(dir);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_find_periodic(const CommonOptions& o) {
  const RunConfig cfg = load_config(o);
  const int threads = apply_threads(o.threads);
  const fs::path dir = cfg.output_dir;
  RunManifest man("find-periodic", cfg, threads);
  const CycleBundle cb = load_or_compute_cycle(cfg, o.cycle);
  const GalerkinSolver solver(cfg.model, galerkin_options(cfg));
  const PeriodicSolutionArtifact art = find_periodic_solution(solver, *cb.cycle, picard_options(cfg));
  write_json_file(dir / "periodic.json", periodic_to_json(art, model_hash_hex(cfg.model)));
  man.add_output("periodic.json");
  const int d = cfg.model.dimension();
  std::vector<std::string> head{"t"};
  for (int i = 0; i < d; ++i) head.push_back("gamma_" + std::to_string(i + 1));
  CsvWriter csv(head);
  for (std::size_t j = 0; j < art.gamma.size(); ++j) {
    std::vector<double> row{art.snapshots[j].t};
    for (int i = 0; i < d; ++i) row.push_back(art.gamma[j][i]);
    csv.row(row);
  }
  write_text_file(dir / "gamma.csv", csv.str());
  man.add_output("gamma.csv");
  const Json summary = {{"period", art.period},
                        {"reduced_period", art.reduced_period},
                        {"residual", art.residual},
                        {"residual_history", art.residual_history},
                        {"max_distance_to_reduced", art.max_distance_to_reduced},
                        {"grid_order", solver.grid_order()}};
  man.extra() = summary;
  man.write(dir);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_simulate(const CommonOptions& o) {
  const RunConfig cfg = load_config(o);
  const int threads = apply_threads(o.threads);
  const fs::path dir = cfg.output_dir;
  RunManifest man("simulate", cfg, threads);
  const auto& e = cfg.experiment;
  const int d = cfg.model.dimension();
  std::vector<double> m0 = cfg.numerics.initial_guess;
  if (!o.cycle.empty()) {
    const CycleBundle cb = load_or_compute_cycle(cfg, o.cycle);
    m0.assign(cb.cycle->samples[0].data(), cb.cycle->samples[0].data() + d);
  }
  const long long stride = std::max(1LL, std::llround(e.observe_every / cfg.numerics.dt));
  Json runs = Json::array();
  const int reps = std::max(1, e.replicas);
  for (int N : e.N) {
    for (int r = 0; r < reps; ++r) {
      ParticleEnsemble ens = make_ensemble(cfg.model, N, cfg.numerics.dt, replica_seed(e.seed, N, r), m0,
                                           InitialLaw::gaussian, cfg.numerics.scheme);
      std::vector<std::string> head{"t"};
      for (int i = 0; i < d; ++i) head.push_back("m_" + std::to_string(i + 1));
      head.push_back("recentering_residual");
      head.push_back("max_abs_Y");
      CsvWriter csv(head);
      double worst = 0.0;
      run(ens, cfg.model, e.horizon,
          {Observer{stride, [&](const ParticleEnsemble& s) {
                      std::vector<double> row{s.t};
                      for (int i = 0; i < d; ++i) row.push_back(s.m[i]);
                      const double res = recentering_residual(s), mx = max_abs_particle(s);
                      worst = std::max(worst, res / (1.0 + mx));
                      row.push_back(res);
                      row.push_back(mx);
                      csv.row(row);
                    }}});
      const std::string name = "trace_N" + std::to_string(N) + "_r" + std::to_string(r) + ".csv";
      write_text_file(dir / name, csv.str());
      man.add_output(name);
      runs.push_back({{"N", N}, {"replica", r}, {"file", name}, {"max_relative_recentering", worst}});
    }
  }
  man.extra() = {{"runs", runs}};
  man.write(dir);
  std::cout << runs.dump(2) << "\n";
  return 0;
}

Json estimate_json(const DiffusionEstimate& est) {
  return {{"b_hat", est.b_hat},
          {"b_ci", {est.b_ci.lo, est.b_ci.hi}},
          {"a2_hat_variance_reading", est.a2_hat},
          {"a2_ci_variance_reading", {est.a2_ci.lo, est.a2_ci.hi}},
          {"a2_hat_stddev_reading", est.a2_sd_hat},
          {"a2_ci_stddev_reading", {est.a2_sd_ci.lo, est.a2_sd_ci.hi}},
          {"r2_variance", est.r2_variance},
          {"r2_mean", est.r2_mean},
          {"diagnostics_ok", est.diagnostics_ok},
          {"replicas", est.replicas},
          {"flagged", est.flagged},
          {"resamples", est.resamples},
          {"normality_final", {{"jarque_bera", est.final_normality.statistic}, {"p_value", est.final_normality.p_value}}}};
}

int cmd_phase_diffusion(const CommonOptions& o) {
  const RunConfig cfg = load_config(o);
  const int threads = apply_threads(o.threads);
  const auto& e = cfg.experiment;
  if (e.replicas < e.min_replicas)
    throw StatisticsError("insufficient replicas: " + std::to_string(e.replicas) + " requested, " +
                          std::to_string(e.min_replicas) + " required");
  if (!(cfg.model.delta() > 0.0)) throw ConfigError("model.delta: phase diffusion requires delta > 0");
  const fs::path dir = cfg.output_dir;
  RunManifest man("phase-diffusion", cfg, threads);
  const CycleBundle cb = load_or_compute_cycle(cfg, o.cycle);
  const PeriodicSolutionArtifact art = load_or_compute_periodic(cfg, cb, o.periodic);
  const PhaseExtractor ex(cb.iso, art);

  DephasingRunOptions ro;
  ro.dt = cfg.numerics.dt;
  ro.scheme = cfg.numerics.scheme;
  ro.t_f = e.t_f;
  ro.observations = e.observations;
  ro.extraction_stride = e.extraction_stride;
  ro.seed = e.seed;

  Json per_n = Json::array();
  std::vector<DiffusionEstimate> ests;
  std::string failure;
  for (int N : e.N) {
    std::vector<PhaseTrace> traces(e.replicas);
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < e.replicas; ++r) traces[r] = simulate_dephasing(cfg.model, ex, art.gamma[0], N, r, ro);
    CsvWriter csv({"replica", "t", "v", "flagged"});
    for (const auto& tr : traces)
      for (std::size_t k = 0; k < tr.v.size(); ++k)
        csv.row({static_cast<double>(tr.replica), tr.times[k], tr.v[k], tr.flagged ? 1.0 : 0.0});
    const std::string name = "traces_N" + std::to_string(N) + ".csv";
    write_text_file(dir / name, csv.str());
    man.add_output(name);
    int gaps = 0, unwraps = 0;
    for (const auto& tr : traces) {
      gaps += tr.flag == "gap";
      unwraps += tr.flag == "unwrap";
    }
    try {
      const DiffusionEstimate est = estimate_coefficients(traces, e.bootstrap, e.seed, e.min_replicas);
      Json j = estimate_json(est);
      j["N"] = N;
      j["flag_counts"] = {{"gap", gaps}, {"unwrap", unwraps}};
      per_n.push_back(j);
      ests.push_back(est);
    } catch (const StatisticsError& err) {
      per_n.push_back({{"N", N}, {"error", err.what()}, {"flag_counts", {{"gap", gaps}, {"unwrap", unwraps}}}});
      if (failure.empty()) failure = "N=" + std::to_string(N) + ": " + err.what();
    }
  }
  Json out;
  out["estimates"] = per_n;
  Json cross = Json::array();
  for (std::size_t i = 0; i + 1 < ests.size(); ++i)
    for (std::size_t j = i + 1; j < ests.size(); ++j)
      cross.push_back({{"N_pair", {per_n[i]["N"], per_n[j]["N"]}},
                       {"b_cis_overlap", ests[i].b_ci.overlaps(ests[j].b_ci)},
                       {"a2_cis_overlap", ests[i].a2_ci.overlaps(ests[j].a2_ci)}});
  out["cross_N"] = cross;
  out["period"] = art.period;
  const Json cyc = o.cycle.empty() ? Json() : read_json_file(o.cycle);
  if (cyc.is_object() && cyc.contains("oracle")) {
    const double a2 = cyc["oracle"]["a2_fd"].get<double>();
    const double b = cyc["oracle"]["b_fd"].get<double>();
    Json cmp = Json::array();
    for (std::size_t i = 0; i < ests.size(); ++i)
      cmp.push_back({{"N", per_n[i]["N"]},
                     {"a2_relative_gap_variance_reading", (ests[i].a2_hat - a2) / a2},
                     {"a2_relative_gap_stddev_reading", (ests[i].a2_sd_hat - a2) / a2},
                     {"b_relative_gap", b != 0.0 ? (ests[i].b_hat - b) / std::abs(b) : 0.0}});
    out["oracle"] = {{"b_fd", b}, {"a2_fd", a2}, {"comparison", cmp}};
  }
  write_json_file(dir / "estimates.json", out);
  man.add_output("estimates.json");
  man.extra() = out;
  man.write(dir);
  std::cout << out.dump(2) << "\n";
  if (!failure.empty()) throw StatisticsError(failure);
  return 0;
}

int cmd_audit_norms(const CommonOptions& o) {
  const RunConfig cfg = load_config(o);
  const int threads = apply_threads(o.threads);
  const fs::path dir = cfg.output_dir;
  RunManifest man("audit-norms", cfg, threads);
  const auto& n = cfg.numerics;
  const int d = cfg.model.dimension();
  const HermiteBasis basis(cfg.model, n.theta, n.r, n.L);
  Json report;
  bool ok = true;

  // Eigenstructure on |l|_inf <= min(6, L).
  const int deg = std::min(6, n.L);
  const HermiteBasis small(cfg.model, n.theta, n.r, deg);
  double worst_eig = 0.0;
  for (std::size_t f = 0; f < small.size(); ++f)
    worst_eig = std::max(worst_eig, eigen_residual(small, small.multi_index(f), 2 * deg + 8));
  const double gram = gram_error(small, deg, 2 * deg + 8);
  report["eigen_residual_max"] = worst_eig;
  report["gram_error"] = gram;
  ok = ok && worst_eig <= 1e-8 && gram <= 1e-8;

  // delta_x bound: ||delta_x|| <= C exp(theta |x|^2_{K sigma^-2} / 3), C fitted at 0.
  const int P = cfg.experiment.audit_points;
  const double R = cfg.experiment.audit_radius;
  std::vector<double> origin(d, 0.0);
  const double C = dual_norm(delta_dual(basis, origin.data()));
  int violations = 0, checked = 0;
  double worst_ratio = 0.0, worst_tail = 0.0;
  std::vector<int> idx(d, 0);
  std::vector<double> x(d);
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(P);
  for (std::size_t q = 0; q < total; ++q) {
    // grid in standardized coordinates z_i = x_i sqrt(k_i) / sigma_i, so |z| = |x|_{K sigma^-2}
    double r2 = 0.0, quad = 0.0;
    for (int i = 0; i < d; ++i) {
      const double z = -R + 2.0 * R * idx[i] / (P - 1);
      x[i] = z * cfg.model.sigma()[i] / std::sqrt(cfg.model.k()[i]);
      r2 += z * z;
    }
    quad = r2;
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < P) break;
      idx[i] = 0;
    }
    if (std::sqrt(r2) > R + 1e-12) continue;
    const DualVector v = delta_dual(basis, x.data());
    const double nv = dual_norm(v);
    const double ratio = nv / (C * std::exp(n.theta * quad / 3.0));
    ++checked;
    worst_ratio = std::max(worst_ratio, ratio);
    worst_tail = std::max(worst_tail, v.relative_tail());
    if (ratio > 1.0 + 1e-12) ++violations;
  }
  report["delta_x"] = {{"C", C},
                       {"points", checked},
                       {"violations", violations},
                       {"max_ratio", worst_ratio},
                       {"max_relative_tail", worst_tail}};
  ok = ok && violations == 0;

  // Same-weight comparison must be exactly 1.
  std::vector<PointMeasure> family;
  for (int j = 0; j < 4; ++j) {
    std::vector<double> pts(d);
    for (int i = 0; i < d; ++i)
      pts[i] = 0.6 * (j + 1) * (i % 2 ? -1.0 : 1.0) * cfg.model.sigma()[i] / std::sqrt(cfg.model.k()[i]);
    family.push_back(empirical_measure(pts, d));
  }
  const ComparisonReport same = cross_weight_comparison(family, basis, basis);
  report["same_weight_ratio_max"] = same.max_ratio;
  bool same_ok = true;
  for (double r : same.ratios) same_ok = same_ok && r == 1.0;
  report["same_weight_ratio_exact"] = same_ok;
  ok = ok && same_ok;

  // theta' = theta / 2 over delta_x, |z| <= R.
  const HermiteBasis half(cfg.model, n.theta / 2.0, n.r, n.L);
  std::vector<PointMeasure> deltas;
  for (int j = 0; j < 7; ++j) {
    std::vector<double> pts(d);
    const double ang = 2.0 * M_PI * j / 7.0, rad = R * j / 6.0;
    for (int i = 0; i < d; ++i)
      pts[i] = rad * (i % 2 ? std::sin(ang) : std::cos(ang)) * cfg.model.sigma()[i] / std::sqrt(cfg.model.k()[i]);
    deltas.push_back(empirical_measure(pts, d));
  }
  const ComparisonReport lower = cross_weight_comparison(deltas, basis, half);
  report["half_weight_ratio_max"] = lower.max_ratio;
  report["half_weight_ratios"] = lower.ratios;
  ok = ok && std::isfinite(lower.max_ratio);

  // Spectral vs derivative-sum norms on random compactly supported bumps.
  std::mt19937_64 gen(cfg.experiment.seed);
  std::uniform_real_distribution<double> centre(-1.0, 1.0), width(1.0, 2.0);
  const HermiteBasis l2basis(cfg.model, n.theta, 0.0, n.L);
  Json equiv = Json::object();
  for (int rr : {1, 2}) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    std::mt19937_64 g = gen;
    for (int f = 0; f < 20; ++f) {
      std::vector<double> c(d), a(d);
      for (int i = 0; i < d; ++i) {
        const double sd = cfg.model.sigma()[i] / std::sqrt(n.theta * cfg.model.k()[i]);
        c[i] = centre(g) * sd;
        a[i] = width(g) * sd;
      }
      auto bump = [&](const double* x) {
        double v = 1.0;
        for (int i = 0; i < d; ++i) {
          const double t = (x[i] - c[i]) / a[i];
          if (std::abs(t) >= 1.0) return 0.0;
          v *= std::exp(-1.0 / (1.0 - t * t));
        }
        return v;
      };
      const auto coeffs = l2_coefficients(l2basis, bump, 2 * n.L + 40);
      const double ratio = spectral_sobolev_norm(l2basis, coeffs, rr) / derivative_sum_norm(l2basis, coeffs, rr);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    const double c = std::max(hi, 1.0 / lo);
    equiv["r" + std::to_string(rr)] = {{"min_ratio", lo}, {"max_ratio", hi}, {"c", c}};
    ok = ok && std::isfinite(c) && lo > 0.0;
  }
  report["norm_equivalence"] = equiv;

  // Partial dual norms must be non-decreasing in L.
  bool monotone = true;
  for (const auto& m : deltas) {
    const auto pn = dual_coefficients(basis, m).partial_norms();
    for (std::size_t j = 1; j < pn.size(); ++j) monotone = monotone && pn[j] >= pn[j - 1];
  }
  report["shell_monotone"] = monotone;
  ok = ok && monotone;

  report["passed"] = ok;
  write_json_file(dir / "audit.json", report);
  man.add_output("audit.json");
  man.extra() = report;
  man.write(dir);
  std::cout << report.dump(2) << "\n";
  return ok ? 0 : static_cast<int>(ExitCode::failure);
}

int cmd_couple(const CommonOptions& o) {
  const RunConfig cfg = load_config(o);
  const int threads = apply_threads(o.threads);
  const fs::path dir = cfg.output_dir;
  RunManifest man("couple", cfg, threads);
  const auto& e = cfg.experiment;
  if (e.replicas < 1) throw StatisticsError("couple needs at least one replica");
  const long long stride = std::max(1LL, std::llround(e.observe_every / cfg.numerics.dt));
  Json summary = Json::array();
  std::vector<double> finals;
  for (int N : e.N) {
    std::vector<CouplingCurve> curves(e.replicas);
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < e.replicas; ++r) {
      CoupledPair pair = make_coupled_pair(cfg.model, N, e.reference_factor * N, cfg.numerics.dt,
                                           replica_seed(e.seed, N, r), cfg.numerics.initial_guess);
      curves[r] = couple_to_mckean_vlasov(pair, cfg.model, e.horizon, stride);
    }
    CsvWriter csv({"t", "mean_error", "sd_error"});
    const std::size_t K = curves.front().t.size();
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<double> vals;
      for (const auto& c : curves) vals.push_back(c.error[k]);
      csv.row({curves.front().t[k], mean(vals), vals.size() > 1 ? std::sqrt(sample_variance(vals)) : 0.0});
    }
    const std::string name = "coupling_N" + std::to_string(N) + ".csv";
    write_text_file(dir / name, csv.str());
    man.add_output(name);
    std::vector<double> last;
    for (const auto& c : curves) last.push_back(c.error.back());
    finals.push_back(mean(last));
    summary.push_back({{"N", N}, {"replicas", e.replicas}, {"mean_final_error", finals.back()}});
  }
  Json out = {{"runs", summary}};
  if (finals.size() >= 2) out["ratio_last_over_first"] = finals.back() / finals.front();
  write_json_file(dir / "coupling.json", out);
  man.add_output("coupling.json");
  man.extra() = out;
  man.write(dir);
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Mean-field phase diffusion toolkit"};
  app.require_subcommand(1);
  CommonOptions o;
  bool oracle = true;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "TOML run configuration");
    sub->add_option("--out", o.out, "output directory (overrides output.dir)");
    sub->add_option("--seed", o.seed, "overrides experiment.seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", o.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  };
  auto* fc = app.add_subcommand("find-cycle", "limit cycle, isochron tube and oracle coefficients");
  common(fc);
  fc->add_flag("!--no-oracle", oracle, "skip the oracle b/a2 computation");
  auto* fp = app.add_subcommand("find-periodic", "periodic solution of the truncated limit PDE");
  common(fp);
  fp->add_option("--cycle", o.cycle, "limit-cycle artifact (cycle.json)");
  auto* sim = app.add_subcommand("simulate", "particle runs with mean traces");
  common(sim);
  sim->add_option("--cycle", o.cycle, "start the mean on this cycle");
  auto* pd = app.add_subcommand("phase-diffusion", "replica sweep and drift/diffusion estimates");
  common(pd);
  pd->add_option("--cycle", o.cycle, "limit-cycle artifact");
  pd->add_option("--periodic", o.periodic, "periodic-solution artifact");
  auto* an = app.add_subcommand("audit-norms", "weighted-norm property battery");
  common(an);
  auto* cp = app.add_subcommand("couple", "propagation-of-chaos coupling error");
  common(cp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::config);
  }
  try {
    if (*fc) return cmd_find_cycle(o, oracle);
    if (*fp) return cmd_find_periodic(o);
    if (*sim) return cmd_simulate(o);
    if (*pd) return cmd_phase_diffusion(o);
    if (*an) return cmd_audit_norms(o);
    if (*cp) return cmd_couple(o);
  } catch (const Error& e) {
    const int code = static_cast<int>(e.exit_code());
    const char* label = code == 1 ? "config" : code == 2 ? "no-cycle" : code == 3 ? "statistics"
                      : code == 4 ? "truncation" : "failure";
    std::cerr << "error (" << label << "): " << e.what() << "\n";
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error (failure): " << e.what() << "\n";
    return static_cast<int>(ExitCode::failure);
  }
  return static_cast<int>(ExitCode::failure);
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace mfp
