#include "mfg/pde_check.hpp"

#include "mfg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mfg {

namespace {

double smooth_step_part(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

// S(s) = f(s) / (f(s) + f(1-s)): 0 for s <= 0, 1 for s >= 1, C-infinity.
double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = smooth_step_part(s);
  const double b = smooth_step_part(1.0 - s);
  return a / (a + b);
}

double smooth_step_derivative(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double a = smooth_step_part(s);
  const double b = smooth_step_part(1.0 - s);
  const double da = a / (s * s);
  const double db = b / ((1.0 - s) * (1.0 - s));
  return (da * b + a * db) / ((a + b) * (a + b));
}

}  // namespace

bool TestFunction::active(double t, const Vec& x) const {
  return t < t_end && (x - center).squaredNorm() < radius * radius;
}

double TestFunction::value(double t, const Vec& x) const {
  if (!active(t, x)) return 0.0;
  const double q = (x - center).squaredNorm() / (radius * radius);
  return std::exp(1.0 - 1.0 / (1.0 - q)) * smooth_step((t_end - t) / ramp);
}

double TestFunction::dt(double t, const Vec& x) const {
  if (!active(t, x)) return 0.0;
  const double q = (x - center).squaredNorm() / (radius * radius);
  return -std::exp(1.0 - 1.0 / (1.0 - q)) * smooth_step_derivative((t_end - t) / ramp) / ramp;
}

Vec TestFunction::dx(double t, const Vec& x) const {
  if (!active(t, x)) return Vec::Zero(x.size());
  const double q = (x - center).squaredNorm() / (radius * radius);
  const double psi = std::exp(1.0 - 1.0 / (1.0 - q));
  const double chi = smooth_step((t_end - t) / ramp);
  return -psi * chi * 2.0 / (radius * radius * (1.0 - q) * (1.0 - q)) * (x - center);
}

std::vector<TestFunction> random_test_functions(const Box& region, double horizon, int n,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit;
  const double diam = region.diameter();
  std::vector<TestFunction> tests;
  for (int q = 0; q < n; ++q) {
    TestFunction f;
    f.center.resize(region.dim());
    for (int k = 0; k < region.dim(); ++k)
      f.center(k) = region.lo(k) + unit(rng) * (region.hi(k) - region.lo(k));
    f.radius = (0.25 + 0.25 * unit(rng)) * diam;
    f.t_end = (0.6 + 0.35 * unit(rng)) * horizon;
    f.ramp = 0.5 * f.t_end;
    tests.push_back(std::move(f));
  }
  return tests;
}

namespace {

ContinuityReport continuity_from_table(const FlowOfMeasures& flow,
                                       const std::vector<std::vector<Vec>>& velocity,
                                       const std::vector<TestFunction>& tests) {
  const TimeGrid& grid = flow.grid();
  ContinuityReport report;
  report.per_test.resize(tests.size());
  for (std::size_t q = 0; q < tests.size(); ++q) {
    const TestFunction& phi = tests[q];
    const ParticleMeasure& m0 = flow.at(0);
    double total = 0.0;
    for (int j = 0; j < m0.size(); ++j) total += m0.weight(j) * phi.value(0.0, m0.point(j));
    for (int i = 0; i < grid.nodes(); ++i) {
      const double c = (i == 0 || i == grid.intervals()) ? 0.5 : 1.0;
      const double t = grid.time(i);
      const ParticleMeasure& m = flow.at(i);
      double inner = 0.0;
      for (int j = 0; j < m.size(); ++j) {
        const Vec x = m.point(j);
        if (!phi.active(t, x)) continue;
        inner += m.weight(j) * (phi.dt(t, x) + phi.dx(t, x).dot(velocity[i][j]));
      }
      total += c * grid.dt() * inner;
    }
    report.per_test[q] = std::abs(total);
    report.max_residual = std::max(report.max_residual, report.per_test[q]);
  }
  return report;
}

bool any_active(const std::vector<TestFunction>& tests, double t, const Vec& x) {
  for (const auto& phi : tests)
    if (phi.active(t, x)) return true;
  return false;
}

}  // namespace

ContinuityReport continuity_residual(const FlowOfMeasures& flow, const VelocityField& field,
                                     const std::vector<TestFunction>& tests) {
  const TimeGrid& grid = flow.grid();
  std::vector<std::vector<Vec>> velocity(grid.nodes());
  for (int i = 0; i < grid.nodes(); ++i) {
    const ParticleMeasure& m = flow.at(i);
    velocity[i].assign(m.size(), Vec::Zero(m.dim()));
    for (int j = 0; j < m.size(); ++j)
      if (any_active(tests, grid.time(i), m.point(j))) velocity[i][j] = field(i, m.point(j));
  }
  return continuity_from_table(flow, velocity, tests);
}

ContinuityReport continuity_residual(const FlowOfMeasures& flow, ValueSource& value,
                                     const LinearDynamics& dyn, const LagrangianModel& model,
                                     const std::vector<TestFunction>& tests) {
  const TimeGrid& grid = flow.grid();
  std::vector<ValueQuery> points;
  std::vector<std::pair<int, int>> where;
  std::vector<std::vector<Vec>> velocity(grid.nodes());
  for (int i = 0; i < grid.nodes(); ++i) {
    const ParticleMeasure& m = flow.at(i);
    velocity[i].assign(m.size(), Vec::Zero(m.dim()));
    for (int j = 0; j < m.size(); ++j)
      if (any_active(tests, grid.time(i), m.point(j))) {
        points.push_back({i, m.point(j)});
        where.emplace_back(i, j);
      }
  }
  const auto grads = fd_gradients(value, points, fd_step(grid));
  parallel_for(points.size(), [&](std::size_t q) {
    const auto [i, j] = where[q];
    const Vec& x = points[q].x;
    velocity[i][j] = dyn.A() * x + dyn.B() * hamiltonian_maximizer(dyn, model, x, grads[q].central);
  });
  return continuity_from_table(flow, velocity, tests);
}

double fd_step(const TimeGrid& grid) { return std::max(1e-4, 0.01 * grid.dt()); }

std::vector<GradientEstimate> fd_gradients(ValueSource& value,
                                           const std::vector<ValueQuery>& points, double h) {
  std::vector<ValueQuery> queries;
  for (const auto& p : points) {
    queries.push_back(p);
    for (Eigen::Index k = 0; k < p.x.size(); ++k) {
      Vec e = Vec::Zero(p.x.size());
      e(k) = h;
      queries.push_back({p.node, p.x + e});
      queries.push_back({p.node, p.x - e});
    }
  }
  const std::vector<double> v = value.values(queries);
  std::vector<GradientEstimate> out(points.size());
  std::size_t pos = 0;
  for (std::size_t q = 0; q < points.size(); ++q) {
    const Eigen::Index d = points[q].x.size();
    const double center = v[pos++];
    out[q].central.resize(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double plus = v[pos++];
      const double minus = v[pos++];
      const double fwd = (plus - center) / h;
      const double bwd = (center - minus) / h;
      const double c = (plus - minus) / (2.0 * h);
      out[q].central(k) = c;
      const double tol = 0.1 * std::max(std::abs(fwd), std::abs(bwd)) + 10.0 * h;
      if (std::abs(fwd - c) > tol || std::abs(bwd - c) > tol) out[q].consistent = false;
    }
  }
  return out;
}

double HjbReport::fraction_below(double tol) const {
  if (residuals.empty()) return 0.0;
  const auto n = std::count_if(residuals.begin(), residuals.end(),
                               [tol](double r) { return r <= tol; });
  return static_cast<double>(n) / static_cast<double>(residuals.size());
}

HjbReport hjb_residual(ValueSource& value, const LinearDynamics& dyn, const LagrangianModel& model,
                       const FlowOfMeasures& flow, const std::vector<ValueQuery>& samples) {
  const TimeGrid& grid = value.grid();
  if (!(grid == flow.grid())) throw InvalidArgument("value source and flow use different grids");
  const int N = grid.intervals();
  const double dt = grid.dt();
  HjbReport report;

  std::vector<ValueQuery> interior;
  std::vector<ValueQuery> terminal;
  for (const auto& s : samples) {
    if (s.node < 0 || s.node > N) throw InvalidArgument("HJB sample node out of range");
    (s.node == N ? terminal : interior).push_back(s);
  }
  if (!terminal.empty()) {
    const std::vector<double> v = value.values(terminal);
    for (std::size_t q = 0; q < terminal.size(); ++q)
      report.terminal_max = std::max(
          report.terminal_max, std::abs(v[q] - model.terminal(terminal[q].x, flow.at(N))));
  }
  if (interior.empty()) return report;

  std::vector<ValueQuery> time_queries;
  for (const auto& s : interior) {
    if (s.node == 0) {
      time_queries.push_back({0, s.x});
      time_queries.push_back({1, s.x});
      time_queries.push_back({2, s.x});
    } else {
      time_queries.push_back({s.node - 1, s.x});
      time_queries.push_back({s.node + 1, s.x});
      time_queries.push_back({s.node, s.x});
    }
  }
  const std::vector<double> tv = value.values(time_queries);
  const auto grads = fd_gradients(value, interior, fd_step(grid));

  std::vector<double> residual(interior.size(), -1.0);
  parallel_for(interior.size(), [&](std::size_t q) {
    if (!grads[q].consistent) return;
    const auto& s = interior[q];
    const double* v = &tv[3 * q];
    const double vt = s.node == 0 ? (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt)
                                  : (v[1] - v[0]) / (2.0 * dt);
    const double H = legendre_hamiltonian(dyn, model, s.x, grads[q].central, flow.at(s.node)).H;
    residual[q] = std::abs(-vt + H);
  });
  for (double r : residual) {
    if (r < 0.0) {
      ++report.skipped;
      continue;
    }
    ++report.kept;
    report.residuals.push_back(r);
    report.max_residual = std::max(report.max_residual, r);
  }
  if (!report.residuals.empty()) {
    std::vector<double> sorted = report.residuals;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&sorted](double p) {
      const std::size_t idx = static_cast<std::size_t>(std::floor(p * (sorted.size() - 1)));
      return sorted[idx];
    };
    report.median = quantile(0.5);
    report.q90 = quantile(0.9);
  }
  return report;
}

MonotonicityReport monotonicity_check(
    const CouplingFunctional& psi,
    const std::vector<std::pair<ParticleMeasure, ParticleMeasure>>& pairs,
    const std::vector<Vec>& witness_points) {
  MonotonicityReport report;
  report.monotone = true;
  report.strictly_monotone = true;
  report.min_pairing = std::numeric_limits<double>::infinity();
  for (const auto& [m1, m2] : pairs) {
    if (m1.dim() != m2.dim()) throw InvalidArgument("measure pair has mismatched dimensions");
    double pairing = 0.0;
    for (int j = 0; j < m1.size(); ++j)
      pairing += m1.weight(j) * (psi(m1.point(j), m1) - psi(m1.point(j), m2));
    for (int j = 0; j < m2.size(); ++j)
      pairing -= m2.weight(j) * (psi(m2.point(j), m1) - psi(m2.point(j), m2));
    report.pairings.push_back(pairing);
    report.min_pairing = std::min(report.min_pairing, pairing);
    if (pairing < -kMonotoneTolerance) report.monotone = false;
    if (std::abs(pairing) <= kMonotoneTolerance) {
      for (const Vec& x : witness_points)
        if (std::abs(psi(x, m1) - psi(x, m2)) > kMonotoneTolerance) {
          report.strictly_monotone = false;
          break;
        }
    }
  }
  if (pairs.empty()) report.min_pairing = 0.0;
  report.strictly_monotone = report.strictly_monotone && report.monotone;
  return report;
}

std::vector<std::pair<ParticleMeasure, ParticleMeasure>> random_measure_pairs(
    const Box& region, int n_pairs, int particles, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit;
  auto draw = [&] {
    Mat pts(region.dim(), particles);
    Vec w(particles);
    for (int j = 0; j < particles; ++j) {
      for (int k = 0; k < region.dim(); ++k)
        pts(k, j) = region.lo(k) + unit(rng) * (region.hi(k) - region.lo(k));
      w(j) = 0.1 + unit(rng);
    }
    return ParticleMeasure::normalized(pts, w);
  };
  std::vector<std::pair<ParticleMeasure, ParticleMeasure>> out;
  for (int q = 0; q < n_pairs; ++q) {
    ParticleMeasure a = draw();
    ParticleMeasure b = draw();
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

UniquenessReport uniqueness_check(const DiscreteFlow& flow, const LagrangianModel& model,
                                  const ParticleMeasure& m0, const EquilibriumConfig& cfg,
                                  int n_runs, const std::vector<ValueQuery>& probe_points,
                                  const Box& region, const ValueProbeOptions& probe_options) {
  if (n_runs < 2) throw InvalidArgument("uniqueness_check needs at least two runs");
  UniquenessReport report;
  const auto pairs = random_measure_pairs(region, 20, 5, cfg.seed);
  std::vector<Vec> witness;
  for (const auto& [a, b] : pairs)
    for (int j = 0; j < a.size(); ++j) witness.push_back(a.point(j));
  const auto F = monotonicity_check(
      [&](const Vec& x, const ParticleMeasure& m) { return model.coupling(x, m); }, pairs, witness);
  const auto G = monotonicity_check(
      [&](const Vec& x, const ParticleMeasure& m) { return model.terminal(x, m); }, pairs, witness);
  if (!F.monotone || !G.monotone) {
    report.skipped = true;
    report.reason = !F.monotone ? "coupling F is not monotone" : "terminal cost G is not monotone";
    return report;
  }

  const InitKind kinds[] = {InitKind::Reference, InitKind::ConstantControl, InitKind::RandomControl};
  std::vector<std::vector<double>> values;
  for (int r = 0; r < n_runs; ++r) {
    const TrajectoryEnsemble init =
        initial_ensemble(flow, m0, kinds[r % 3], cfg.seed + static_cast<std::uint64_t>(r));
    const EquilibriumReport eq = fictitious_play(flow, model, m0, cfg, &init);
    ++report.runs;
    report.converged.push_back(eq.converged);
    report.final_exploitability.push_back(eq.final_exploitability);
    if (!eq.converged) continue;
    ++report.converged_runs;
    ValueProbe probe(flow, model, flow_of(eq.ensemble), probe_options);
    values.push_back(probe.values(probe_points));
  }
  for (std::size_t a = 0; a < values.size(); ++a)
    for (std::size_t b = a + 1; b < values.size(); ++b)
      for (std::size_t q = 0; q < probe_points.size(); ++q)
        report.max_value_gap = std::max(report.max_value_gap, std::abs(values[a][q] - values[b][q]));
  return report;
}

SynthesisReport synthesis_check(ValueSource& value, const LinearDynamics& dyn,
                                const LagrangianModel& model, const TrajectoryEnsemble& eta) {
  const TimeGrid& grid = value.grid();
  if (!(grid == eta.grid())) throw InvalidArgument("value source and ensemble use different grids");
  const int N = grid.intervals();
  const double dt = grid.dt();
  const double h = fd_step(grid);
  const auto groups = disintegrate(eta);
  const std::size_t G = groups.size();

  std::vector<int> stored(G);
  for (std::size_t g = 0; g < G; ++g) {
    Eigen::Index best;
    groups[g].conditional_weights.maxCoeff(&best);
    stored[g] = groups[g].path_indices[best];
  }
  std::vector<Vec> x(G);
  std::vector<bool> alive(G, true);
  std::vector<double> deviation(G, 0.0);
  for (std::size_t g = 0; g < G; ++g) x[g] = groups[g].start;

  // Field values for the live starts at one node.
  auto field = [&](int node, const std::vector<Vec>& pts, std::vector<Vec>& out) {
    std::vector<ValueQuery> q;
    std::vector<std::size_t> idx;
    for (std::size_t g = 0; g < G; ++g)
      if (alive[g]) {
        q.push_back({node, pts[g]});
        idx.push_back(g);
      }
    const auto grads = fd_gradients(value, q, h);
    out.assign(G, Vec());
    for (std::size_t s = 0; s < idx.size(); ++s) {
      const std::size_t g = idx[s];
      if (!grads[s].consistent) {
        alive[g] = false;
        continue;
      }
      out[g] = dyn.A() * pts[g] + dyn.B() * hamiltonian_maximizer(dyn, model, pts[g], grads[s].central);
    }
  };

  std::vector<Vec> k1, k2, predicted(G);
  for (int i = 0; i < N; ++i) {
    field(i, x, k1);
    for (std::size_t g = 0; g < G; ++g)
      if (alive[g]) predicted[g] = x[g] + dt * k1[g];
    field(i + 1, predicted, k2);
    for (std::size_t g = 0; g < G; ++g) {
      if (!alive[g]) continue;
      x[g] += 0.5 * dt * (k1[g] + k2[g]);
      const double scale = 1.0 + groups[g].start.norm();
      deviation[g] = std::max(deviation[g],
                              (x[g] - eta.path(stored[g]).states.col(i + 1)).norm() / scale);
    }
  }
  SynthesisReport report;
  for (std::size_t g = 0; g < G; ++g) {
    if (!alive[g]) {
      ++report.skipped;
      continue;
    }
    report.deviations.push_back(deviation[g]);
    report.max_path_deviation = std::max(report.max_path_deviation, deviation[g]);
  }
  return report;
}

}  // namespace mfg
