#include "mfg/equilibrium.hpp"

#include "mfg/parallel.hpp"
#include "mfg/value_probe.hpp"

#include <cmath>
#include <map>
#include <cstring>
#include <random>

namespace mfg {

void EquilibriumConfig::validate() const {
  if (max_rounds < 1) throw InvalidArgument("max_rounds must be at least 1");
  if (!(tol_gap > 0.0) || !(tol_exploitability > 0.0))
    throw InvalidArgument("equilibrium tolerances must be positive");
  if (averaging == Averaging::Constant && !(lambda > 0.0 && lambda <= 1.0))
    throw InvalidArgument("constant averaging needs lambda in (0, 1]");
  if (!(alpha > 1.0)) throw InvalidArgument("alpha must exceed 1");
  if (R && !(*R >= 0.0)) throw InvalidArgument("R must be nonnegative");
}

TrajectoryEnsemble initial_ensemble(const DiscreteFlow& flow, const ParticleMeasure& m0,
                                    InitKind kind, std::uint64_t seed, double amplitude) {
  if (kind == InitKind::Reference) return reference_ensemble(flow, m0);
  const int k = flow.dynamics().control_dim();
  const int N = flow.grid().intervals();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, amplitude);
  std::vector<Path> paths;
  for (int j = 0; j < m0.size(); ++j) {
    Mat u(k, N);
    if (kind == InitKind::ConstantControl) {
      u.colwise() = Vec::Constant(k, amplitude);
    } else {
      for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = normal(rng);
    }
    paths.push_back(integrate_path(flow, 0, m0.point(j), u));
  }
  return TrajectoryEnsemble(std::move(paths), m0.weights(), flow.grid());
}

namespace {

bool same_start(const Vec& a, const Vec& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

BestResponse best_response_detail(const DiscreteFlow& flow, const LagrangianModel& model,
                                  const TrajectoryEnsemble& eta, const OcpOptions& options,
                                  const std::vector<std::pair<Vec, Mat>>* warm) {
  if (!(eta.grid() == flow.grid())) throw InvalidArgument("ensemble grid differs from the flow grid");
  const FlowOfMeasures mflow = flow_of(eta);
  const auto groups = disintegrate(eta);
  const int k = flow.dynamics().control_dim();
  const int N = flow.grid().intervals();

  std::vector<double> path_cost(eta.size());
  parallel_for(eta.size(), [&](std::size_t j) {
    const Path& p = eta.path(static_cast<int>(j));
    path_cost[j] = ocp_cost(flow, model, mflow, 0, p.initial_state(), p.controls);
  });

  BestResponse out{eta, 0.0, std::vector<OcpSolution>(groups.size()), {}};
  parallel_for(groups.size(), [&](std::size_t g) {
    const auto& group = groups[g];
    std::vector<Mat> starts{Mat::Zero(k, N)};
    if (warm)
      for (const auto& [start, controls] : *warm)
        if (same_start(start, group.start)) starts.push_back(controls);
    int cheapest = group.path_indices.front();
    for (int j : group.path_indices)
      if (path_cost[j] < path_cost[cheapest]) cheapest = j;
    starts.push_back(eta.path(cheapest).controls);
    out.solutions[g] = solve_multistart(flow, model, mflow, 0, group.start, starts, options);
  });

  std::vector<Path> paths(eta.size());
  double realized = 0.0;
  double optimal = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    out.starts.push_back(groups[g].start);
    optimal += groups[g].mass * out.solutions[g].cost;
    for (int j : groups[g].path_indices) {
      paths[j] = out.solutions[g].path;
      realized += eta.weight(j) * path_cost[j];
    }
  }
  out.exploitability = realized - optimal;
  out.ensemble = TrajectoryEnsemble(std::move(paths), eta.weights(), eta.grid());
  return out;
}

TrajectoryEnsemble best_response_ensemble(const DiscreteFlow& flow, const LagrangianModel& model,
                                          const TrajectoryEnsemble& eta,
                                          const OcpOptions& options) {
  return best_response_detail(flow, model, eta, options).ensemble;
}

double exploitability(const DiscreteFlow& flow, const LagrangianModel& model,
                      const TrajectoryEnsemble& eta, const OcpOptions& options) {
  return best_response_detail(flow, model, eta, options).exploitability;
}

TrajectoryEnsemble mix_ensembles(const TrajectoryEnsemble& a, const TrajectoryEnsemble& b,
                                 double lambda) {
  if (!(a.grid() == b.grid())) throw InvalidArgument("cannot mix ensembles on different grids");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("mixing weight must lie in [0, 1]");
  std::vector<Path> paths;
  std::vector<double> weights;
  auto add = [&](const TrajectoryEnsemble& e, double scale) {
    for (int j = 0; j < e.size(); ++j) {
      const double w = scale * e.weight(j);
      if (w < 1e-12) continue;
      const Path& p = e.path(j);
      bool merged = false;
      for (std::size_t q = 0; q < paths.size(); ++q) {
        if (paths[q].states.cols() == p.states.cols() &&
            same_start(paths[q].initial_state(), p.initial_state()) &&
            (paths[q].states - p.states).cwiseAbs().maxCoeff() < 1e-10) {
          weights[q] += w;
          merged = true;
          break;
        }
      }
      if (!merged) {
        paths.push_back(p);
        weights.push_back(w);
      }
    }
  };
  add(a, 1.0 - lambda);
  add(b, lambda);
  if (paths.empty()) throw InvalidArgument("mixing removed every path");
  Vec w = Eigen::Map<const Vec>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  w /= w.sum();
  return TrajectoryEnsemble(std::move(paths), w, a.grid());
}

double flow_lipschitz_constant(const FlowOfMeasures& flow) {
  const double dt = flow.grid().dt();
  double L = 0.0;
  for (int i = 0; i + 1 < flow.grid().nodes(); ++i)
    L = std::max(L, wasserstein1(flow.at(i), flow.at(i + 1)) / dt);
  return L;
}

std::vector<double> EquilibriumReport::gaps() const {
  std::vector<double> out;
  for (const auto& r : rounds) out.push_back(r.gap);
  return out;
}

std::vector<double> EquilibriumReport::exploitability_trace() const {
  std::vector<double> out;
  for (const auto& r : rounds) out.push_back(r.exploitability);
  return out;
}

namespace {

void record_bounds(EquilibriumReport& report, const DiscreteFlow& flow,
                   const std::vector<OcpSolution>& solutions) {
  if (!report.bounds) return;
  for (const auto& sol : solutions) {
    const BoundCertificate c = certify_solution(flow, *report.bounds, sol);
    report.worst_control_ratio =
        std::max(report.worst_control_ratio, c.control_l2 * kBoundSlack / c.control_bound);
    report.worst_state_ratio =
        std::max(report.worst_state_ratio, c.state_sup * kBoundSlack / c.state_bound);
    report.worst_velocity_ratio =
        std::max(report.worst_velocity_ratio, c.velocity_l2 * kBoundSlack / c.velocity_bound);
  }
}

void record_lipschitz(LipschitzCertificate& cert, const DiscreteFlow& flow,
                      const TrajectoryEnsemble& eta, const std::vector<OcpSolution>& solutions) {
  const double L = flow_lipschitz_constant(flow_of(eta));
  cert.flow_lipschitz = L;
  cert.max_flow_lipschitz = std::max(cert.max_flow_lipschitz, L);
  for (const auto& sol : solutions)
    cert.max_velocity_ratio =
        std::max(cert.max_velocity_ratio, velocity_sup_norm(flow.dynamics(), sol.path) /
                                              (1.0 + sol.path.initial_state().norm()));
}

}  // namespace

EquilibriumReport fictitious_play(const DiscreteFlow& flow, const LagrangianModel& model,
                                  const ParticleMeasure& m0, const EquilibriumConfig& cfg,
                                  const TrajectoryEnsemble* init) {
  cfg.validate();
  if (m0.dim() != flow.dynamics().state_dim())
    throw InvalidArgument("m0 dimension does not match the dynamics");
  EquilibriumReport report(init ? *init : reference_ensemble(flow, m0));
  if (!(report.ensemble.grid() == flow.grid()))
    throw InvalidArgument("initial ensemble grid differs from the flow grid");
  try {
    report.bounds = apriori_bounds(flow.dynamics(), model, m0, cfg.alpha, cfg.c3, cfg.c4, cfg.seed);
  } catch (const InvalidModel&) {
    if (!cfg.R) throw;
  }
  report.R = cfg.R ? *cfg.R : report.bounds->R_star;

  if (cfg.lipschitz) {
    LipschitzCertificate cert;
    if (cfg.c3 && cfg.c4) {
      const double r = report.bounds ? report.bounds->radius : 1.0 + m0.points().cwiseAbs().maxCoeff();
      const int d = flow.dynamics().state_dim();
      cert.h1 = check_h1(flow.dynamics(), model, Box::cube(d, r), Box::cube(d, 2.0 * (1.0 + r)),
                         m0, *cfg.c3, *cfg.c4, cfg.h1_samples, cfg.seed);
      cert.h1_pass = cert.h1.pass && *cfg.c3 > 0.0;
    }
    if (report.bounds) cert.Q1 = report.bounds->Q1;
    report.lipschitz = cert;
  }

  std::vector<std::pair<Vec, Mat>> warm;
  bool have_final_br = false;
  double final_br_exploitability = 0.0;
  for (int round = 0; round < cfg.max_rounds; ++round) {
    RoundRecord rec;
    rec.round = round;
    rec.paths = report.ensemble.size();
    rec.admissibility = check_admissible(report.ensemble, m0, flow.dynamics(), report.R, cfg.alpha);
    BestResponse br = best_response_detail(flow, model, report.ensemble, cfg.ocp, &warm);
    record_bounds(report, flow, br.solutions);
    if (report.lipschitz) record_lipschitz(*report.lipschitz, flow, report.ensemble, br.solutions);
    rec.exploitability = br.exploitability;
    if (!report.rounds.empty() &&
        rec.exploitability > report.rounds.back().exploitability + 1e-4)
      report.exploitability_monotone = false;
    warm.clear();
    for (std::size_t g = 0; g < br.starts.size(); ++g)
      warm.emplace_back(br.starts[g], br.solutions[g].controls());

    if (br.exploitability <= cfg.tol_exploitability) {
      report.rounds.push_back(rec);
      report.converged = true;
      report.stop_reason = "exploitability";
      have_final_br = true;
      final_br_exploitability = br.exploitability;
      break;
    }
    rec.lambda = cfg.averaging == Averaging::Harmonic ? 1.0 / (round + 1.0) : cfg.lambda;
    TrajectoryEnsemble next = mix_ensembles(report.ensemble, br.ensemble, rec.lambda);
    rec.gap = flow_distance(flow_of(report.ensemble), flow_of(next));
    report.rounds.push_back(rec);
    report.ensemble = std::move(next);
    if (rec.gap <= cfg.tol_gap) {
      report.converged = true;
      report.stop_reason = "gap";
      break;
    }
  }
  if (!report.converged) report.stop_reason = "max_rounds";
  if (have_final_br) {
    report.final_exploitability = final_br_exploitability;
  } else {
    BestResponse br = best_response_detail(flow, model, report.ensemble, cfg.ocp, &warm);
    record_bounds(report, flow, br.solutions);
    if (report.lipschitz) record_lipschitz(*report.lipschitz, flow, report.ensemble, br.solutions);
    report.final_exploitability = br.exploitability;
  }
  report.final_admissibility =
      check_admissible(report.ensemble, m0, flow.dynamics(), report.R, cfg.alpha);
  if (report.lipschitz) {
    auto& cert = *report.lipschitz;
    cert.velocity_ok = cert.Q1 && cert.max_velocity_ratio <= *cert.Q1;
    cert.certified = cert.h1_pass && cert.velocity_ok && std::isfinite(cert.max_flow_lipschitz);
  }
  return report;
}

EquilibriumReport lipschitz_equilibrium(const DiscreteFlow& flow, const LagrangianModel& model,
                                        const ParticleMeasure& m0, EquilibriumConfig cfg) {
  cfg.lipschitz = true;
  return fictitious_play(flow, model, m0, cfg, nullptr);
}

}  // namespace mfg
