#include "mfg/app.hpp"

#include "mfg/bounds.hpp"
#include "mfg/equilibrium.hpp"
#include "mfg/models.hpp"
#include "mfg/parallel.hpp"
#include "mfg/pde_check.hpp"
#include "mfg/regularity.hpp"
#include "mfg/value_probe.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>

namespace mfg {

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{"solve-ocp",   "equilibrium",    "diagnose",
                                              "check-pde",   "check-monotone", "check-unique",
                                              "bench"};
  return names;
}

namespace {

struct Section {
  Json json;
  bool pass = true;
};

class Context {
 public:
  Context(const RunConfig& cfg, std::filesystem::path dir, std::ostream& log)
      : cfg(cfg),
        flow(cfg.dynamics(), cfg.grid()),
        model(cfg.model),
        dir(std::move(dir)),
        log(log) {
    try {
      bounds = apriori_bounds(flow.dynamics(), model, cfg.m0, cfg.alpha, cfg.equilibrium.c3,
                              cfg.equilibrium.c4, cfg.seed);
    } catch (const InvalidModel& e) {
      log << "a-priori bounds unavailable: " << e.what() << "\n";
    }
  }

  const EquilibriumReport& equilibrium() {
    if (!eq) {
      const auto t0 = std::chrono::steady_clock::now();
      eq = cfg.equilibrium.lipschitz
               ? lipschitz_equilibrium(flow, model, cfg.m0, cfg.equilibrium)
               : fictitious_play(flow, model, cfg.m0, cfg.equilibrium);
      log << "equilibrium: " << eq->rounds.size() << " rounds, converged=" << eq->converged
          << ", exploitability " << eq->final_exploitability << " ("
          << seconds_since(t0) << " s)\n";
      std::ofstream out(dir / "flow.csv");
      if (!out) throw IoError("cannot write " + (dir / "flow.csv").string());
      write_flow_csv(out, flow_of(eq->ensemble));
    }
    return *eq;
  }

  ValueProbe& equilibrium_probe() {
    if (!probe) {
      ValueProbeOptions opts;
      opts.multistart = cfg.ocp.multistart;
      opts.seed = cfg.seed;
      opts.ocp = cfg.ocp.options;
      probe.emplace(flow, model, flow_of(equilibrium().ensemble), opts);
    }
    return *probe;
  }

  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  std::ofstream open(const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    return out;
  }

  const RunConfig& cfg;
  DiscreteFlow flow;
  CompositeModel model;
  std::optional<AprioriBounds> bounds;
  std::optional<EquilibriumReport> eq;
  std::optional<ValueProbe> probe;
  std::filesystem::path dir;
  std::ostream& log;
};

Json certificate_json(const BoundCertificate& c) {
  return Json{{"control_l2", c.control_l2},       {"control_bound", c.control_bound},
              {"state_sup", c.state_sup},         {"state_bound", c.state_bound},
              {"velocity_l2", c.velocity_l2},     {"velocity_bound", c.velocity_bound},
              {"pass", c.pass}};
}

Section solve_ocp(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const DiscreteFlow& flow = ctx.flow;
  const int N = cfg.N;
  const Vec x = cfg.ocp.x ? *cfg.ocp.x : cfg.m0.point(0);
  const int i0 = cfg.ocp.t0_index;
  ValueProbeOptions opts;
  opts.multistart = cfg.ocp.multistart;
  opts.seed = cfg.seed;
  opts.ocp = cfg.ocp.options;
  ValueProbe probe(flow, ctx.model, flow_of(reference_ensemble(flow, cfg.m0)), opts);
  const OcpSolution sol = probe.solve(i0, x);
  const int mid = i0 + (N - i0) / 2;
  const double dpp = dpp_residual(probe, i0, mid, x);

  Section s;
  s.json = Json{{"x", to_json(x)},
                {"t0_index", i0},
                {"cost", sol.cost},
                {"grad_norm", sol.grad_norm},
                {"iterations", sol.iterations},
                {"pmp_residual", sol.pmp_residual},
                {"dpp_residual", dpp},
                {"dpp_nodes", Json::array({i0, mid})},
                {"final_state", to_json(sol.path.final_state())},
                {"frozen_flow", "reference ensemble of m0"}};
  if (ctx.bounds) {
    const BoundCertificate c = certify_solution(flow, *ctx.bounds, sol);
    s.json["bounds"] = certificate_json(c);
    s.pass = c.pass;
  }
  auto out = ctx.open("ocp_path.csv");
  out.precision(17);
  out << "t,node";
  for (int k = 0; k < x.size(); ++k) out << ",x" << k + 1;
  for (int k = 0; k < sol.path.controls.rows(); ++k) out << ",u" << k + 1;
  out << "\n";
  for (int s_ = 0; s_ < sol.path.states.cols(); ++s_) {
    out << flow.grid().time(i0 + s_) << ',' << i0 + s_;
    for (int k = 0; k < x.size(); ++k) out << ',' << sol.path.states(k, s_);
    for (int k = 0; k < sol.path.controls.rows(); ++k)
      out << ',' << (s_ < sol.path.steps() ? sol.path.controls(k, s_) : sol.path.controls(k, s_ - 1));
    out << "\n";
  }
  return s;
}

Section equilibrium(Context& ctx) {
  const EquilibriumReport& eq = ctx.equilibrium();
  Section s;
  s.json = to_json(eq, true);
  s.pass = eq.converged && eq.final_admissibility.admissible;
  if (eq.bounds)
    s.pass = s.pass && eq.worst_control_ratio <= 1.0 && eq.worst_state_ratio <= 1.0 &&
             eq.worst_velocity_ratio <= 1.0;
  if (eq.lipschitz) s.pass = s.pass && eq.lipschitz->certified;
  return s;
}

Section diagnose(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const EquilibriumReport& eq = ctx.equilibrium();
  const FlowOfMeasures mflow = flow_of(eq.ensemble);
  Section s;

  const HolderFit fit = holder_fit(mflow);
  {
    auto out = ctx.open("distances.csv");
    write_distance_pairs_csv(out, fit);
  }
  Json holder{{"exponent", fit.exponent},
              {"constant", fit.constant},
              {"worst_pair", Json::array({fit.worst_pair.i, fit.worst_pair.j})}};
  if (ctx.bounds) {
    holder["kappa"] = ctx.bounds->kappa;
    const bool ok = !eq.converged || fit.constant <= 1.1 * ctx.bounds->kappa;
    holder["pass"] = ok;
    s.pass = s.pass && ok;
  }
  if (cfg.equilibrium.lipschitz) {
    const bool ok = fit.exponent >= 0.95;
    holder["exponent_pass"] = ok;
    s.pass = s.pass && ok;
  }
  s.json["holder"] = holder;

  ValueProbe& probe = ctx.equilibrium_probe();
  SemiconcavityOptions sc;
  sc.probes = cfg.diagnostics.semiconcavity_probes;
  sc.seed = cfg.seed;
  sc.time_modulus = cfg.equilibrium.lipschitz ? TimeModulus::Quadratic : TimeModulus::Fractional;
  const SemiconcavityReport semi = semiconcavity_probe(probe, cfg.region(), sc);
  s.json["semiconcavity"] = Json{{"lambda_space", semi.lambda_space},
                                 {"lambda_time", semi.lambda_time},
                                 {"lambda_fit", semi.lambda_fit},
                                 {"probes", static_cast<int>(semi.probes.size())},
                                 {"violations", static_cast<int>(semi.violations.size())},
                                 {"time_modulus", cfg.equilibrium.lipschitz ? "quadratic" : "fractional"}};
  s.pass = s.pass && semi.violations.empty();

  const LipschitzProbeReport lip =
      lipschitz_probe(probe, cfg.region(), cfg.diagnostics.lipschitz_pairs, cfg.seed);
  Json lj{{"L_space", lip.L_space}, {"L_time", lip.L_time}, {"pairs", lip.pairs}};
  if (ctx.bounds) {
    lj["L_space_bound"] = ctx.bounds->L_space;
    const bool ok = lip.L_space <= 1.1 * ctx.bounds->L_space;
    lj["pass"] = ok;
    s.pass = s.pass && ok;
  }
  s.json["lipschitz"] = lj;
  s.json["flow_lipschitz"] = flow_lipschitz_constant(mflow);
  return s;
}

std::vector<ValueQuery> random_samples(const RunConfig& cfg, int n, int node_lo, int node_hi,
                                       std::uint64_t seed) {
  const Box region = cfg.region();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> node(node_lo, node_hi);
  std::uniform_real_distribution<double> unit;
  std::vector<ValueQuery> out;
  for (int q = 0; q < n; ++q) {
    Vec x(region.dim());
    for (int k = 0; k < region.dim(); ++k)
      x(k) = region.lo(k) + unit(rng) * (region.hi(k) - region.lo(k));
    out.push_back({node(rng), x});
  }
  return out;
}

Section check_pde(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto& d = cfg.diagnostics;
  const EquilibriumReport& eq = ctx.equilibrium();
  const FlowOfMeasures mflow = flow_of(eq.ensemble);
  ValueProbe& probe = ctx.equilibrium_probe();
  Section s;

  const auto tests = random_test_functions(cfg.region(), cfg.T, d.n_tests, cfg.seed);
  const ContinuityReport cont =
      continuity_residual(mflow, probe, ctx.flow.dynamics(), ctx.model, tests);
  const bool cont_ok = cont.max_residual <= d.tol_pde;
  s.json["continuity"] = Json{{"max_residual", cont.max_residual},
                              {"per_test", cont.per_test},
                              {"tolerance", d.tol_pde},
                              {"pass", cont_ok}};

  auto samples = random_samples(cfg, d.hjb_samples, 1, cfg.N - 1, cfg.seed + 1);
  for (const auto& extra : random_samples(cfg, 5, cfg.N, cfg.N, cfg.seed + 2)) samples.push_back(extra);
  const HjbReport hjb = hjb_residual(probe, ctx.flow.dynamics(), ctx.model, mflow, samples);
  const double frac = hjb.fraction_below(d.tol_hjb);
  const bool hjb_ok = frac >= d.hjb_fraction && hjb.terminal_max <= 1e-9;
  s.json["hjb"] = Json{{"max_residual", hjb.max_residual},
                       {"median", hjb.median},
                       {"q90", hjb.q90},
                       {"kept", hjb.kept},
                       {"skipped", hjb.skipped},
                       {"fraction_below_tolerance", frac},
                       {"tolerance", d.tol_hjb},
                       {"terminal_max", hjb.terminal_max},
                       {"pass", hjb_ok}};

  const SynthesisReport syn = synthesis_check(probe, ctx.flow.dynamics(), ctx.model, eq.ensemble);
  const bool syn_ok = syn.max_path_deviation <= d.tol_synthesis;
  s.json["synthesis"] = Json{{"max_path_deviation", syn.max_path_deviation},
                             {"skipped", syn.skipped},
                             {"tolerance", d.tol_synthesis},
                             {"pass", syn_ok}};
  s.json["equilibrium_converged"] = eq.converged;
  s.pass = cont_ok && hjb_ok && syn_ok && eq.converged;
  return s;
}

std::vector<Vec> witness_grid(const Box& region, int n, std::uint64_t seed) {
  std::vector<Vec> pts;
  if (region.dim() == 1) {
    for (int q = 0; q < n; ++q)
      pts.push_back(Vec::Constant(1, region.lo(0) + (region.hi(0) - region.lo(0)) * q / (n - 1.0)));
    return pts;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit;
  for (int q = 0; q < n * n; ++q) {
    Vec x(region.dim());
    for (int k = 0; k < region.dim(); ++k)
      x(k) = region.lo(k) + unit(rng) * (region.hi(k) - region.lo(k));
    pts.push_back(x);
  }
  return pts;
}

Json monotone_json(const MonotonicityReport& r) {
  return Json{{"min_pairing", r.min_pairing},
              {"monotone", r.monotone},
              {"strictly_monotone", r.strictly_monotone},
              {"pairs", static_cast<int>(r.pairings.size())}};
}

Section check_monotone(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Box region = cfg.region();
  const auto pairs = random_measure_pairs(region, 50, 5, cfg.seed);
  const auto witness = witness_grid(region, cfg.diagnostics.probe_grid, cfg.seed);
  const CompositeModel& model = ctx.model;
  const auto F = monotonicity_check(
      [&](const Vec& x, const ParticleMeasure& m) { return model.coupling(x, m); }, pairs, witness);
  const auto G = monotonicity_check(
      [&](const Vec& x, const ParticleMeasure& m) { return model.terminal(x, m); }, pairs, witness);
  Section s;
  s.json = Json{{"coupling", monotone_json(F)}, {"terminal", monotone_json(G)}};
  s.pass = F.monotone && G.monotone;
  return s;
}

std::vector<ValueQuery> probe_grid_points(const RunConfig& cfg) {
  const int n = cfg.diagnostics.probe_grid;
  const auto xs = witness_grid(cfg.region(), n, cfg.seed);
  std::vector<ValueQuery> out;
  for (int a = 0; a < n; ++a) {
    const int node = static_cast<int>(std::lround(static_cast<double>(cfg.N) * a / std::max(1, n - 1)));
    for (const Vec& x : xs) out.push_back({node, x});
  }
  return out;
}

Section check_unique(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  ValueProbeOptions opts;
  opts.multistart = cfg.ocp.multistart;
  opts.seed = cfg.seed;
  opts.ocp = cfg.ocp.options;
  const UniquenessReport u =
      uniqueness_check(ctx.flow, ctx.model, cfg.m0, cfg.equilibrium, cfg.diagnostics.runs,
                       probe_grid_points(cfg), cfg.region(), opts);
  Section s;
  s.json = Json{{"skipped", u.skipped},
                {"reason", u.reason},
                {"max_value_gap", u.max_value_gap},
                {"runs", u.runs},
                {"converged_runs", u.converged_runs},
                {"final_exploitability", u.final_exploitability},
                {"tolerance", cfg.diagnostics.tol_unique}};
  std::vector<bool> conv = u.converged;
  s.json["converged"] = conv;
  s.pass = !u.skipped && u.converged_runs >= 2 && u.max_value_gap <= cfg.diagnostics.tol_unique;
  return s;
}

std::filesystem::path fresh_directory(const std::filesystem::path& root, const std::string& name) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%S", &tm);
  char full[48];
  std::snprintf(full, sizeof full, "%s-%03lld", stamp, static_cast<long long>(ms));
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw IoError("cannot create output directory " + root.string() + ": " + ec.message());
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::string leaf = name + "-" + full;
    if (attempt) leaf += "-" + std::to_string(attempt);
    const std::filesystem::path dir = root / leaf;
    if (std::filesystem::create_directory(dir, ec)) return dir;
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  }
  throw IoError("cannot find a fresh run directory under " + root.string());
}

}  // namespace

RunResult run_subcommand(const std::string& name, const RunConfig& cfg,
                         const std::filesystem::path& out_root, std::ostream& log) {
  const auto& names = subcommand_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw InvalidArgument("unknown subcommand '" + name + "'");
  set_worker_count(cfg.threads);
  RunResult result;
  result.directory = fresh_directory(out_root, name);
  Context ctx(cfg, result.directory, log);
  const auto t0 = std::chrono::steady_clock::now();

  Json report{{"subcommand", name},
              {"config_hash", cfg.hash},
              {"seed", cfg.seed},
              {"model", ctx.model.name()}};
  report["apriori"] = ctx.bounds ? to_json(*ctx.bounds) : Json(nullptr);
  bool pass = true;
  auto add = [&](const std::string& key, Section (*fn)(Context&)) {
    const auto start = std::chrono::steady_clock::now();
    Section s = fn(ctx);
    log << key << ": " << (s.pass ? "pass" : "FAIL") << " (" << Context::seconds_since(start)
        << " s)\n";
    s.json["pass"] = s.pass;
    report[key] = std::move(s.json);
    pass = pass && s.pass;
  };
  if (name == "solve-ocp") add("ocp", solve_ocp);
  if (name == "equilibrium") add("equilibrium", equilibrium);
  if (name == "diagnose") add("diagnose", diagnose);
  if (name == "check-pde") add("pde", check_pde);
  if (name == "check-monotone") add("monotone", check_monotone);
  if (name == "check-unique") add("unique", check_unique);
  if (name == "bench") {
    add("ocp", solve_ocp);
    add("equilibrium", equilibrium);
    add("diagnose", diagnose);
    add("monotone", check_monotone);
  }
  report["pass"] = pass;
  {
    std::ofstream out(result.directory / "report.json");
    if (!out) throw IoError("cannot write report in " + result.directory.string());
    out << emit_json(report);
    if (!out) throw IoError("failed writing report in " + result.directory.string());
  }
  log << name << " finished in " << Context::seconds_since(t0) << " s: "
      << (pass ? "all contracts hold" : "contract violation") << "\n";
  result.exit_code = pass ? kExitOk : kExitContract;
  result.report = std::move(report);
  return result;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Particle solver and verification suite for first-order mean field games with "
               "linear dynamics"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool lipschitz = false;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output root (overrides the config)");
  app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--threads", threads, "worker threads, 0 = all cores");
  app.add_flag("--lipschitz", lipschitz, "run the Lipschitz-equilibrium mode");
  app.fallthrough();
  const std::vector<std::pair<std::string, std::string>> descriptions{
      {"solve-ocp", "best response against the reference flow of m0"},
      {"equilibrium", "fictitious play to an equilibrium ensemble"},
      {"diagnose", "Hoelder, semiconcavity and Lipschitz diagnostics"},
      {"check-pde", "continuity, HJB and synthesis residuals"},
      {"check-monotone", "monotonicity of F and G"},
      {"check-unique", "value gaps across fictitious-play initializations"},
      {"bench", "ocp, equilibrium, diagnose and monotone in one report"}};
  for (const auto& [name, help] : descriptions) app.add_subcommand(name, help);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (lipschitz) cfg.equilibrium.lipschitz = true;
    rehash(cfg);
    const std::filesystem::path root = std::filesystem::path(out_dir.empty() ? cfg.output : out_dir);
    RunResult r = run_subcommand(name, cfg, root, std::cerr);
    if (name == "solve-ocp") std::cout << emit_json(r.report["ocp"]);
    std::cout << (r.directory / "report.json").string() << "\n";
    return r.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitContract;
  }
}

}  // namespace mfg
