#include "doctest.h"
#include "oracles.hpp"

#include "mfg/pde_check.hpp"

using namespace mfg;
using oracle::vec1;

namespace {

class ClosedFormValue : public ValueSource {
 public:
  ClosedFormValue(TimeGrid grid, std::function<double(double, const Vec&)> f) : grid_(grid), f_(std::move(f)) {}
  const TimeGrid& grid() const override { return grid_; }
  double value(int node, const Vec& x) override { return f_(grid_.time(node), x); }

 private:
  TimeGrid grid_;
  std::function<double(double, const Vec&)> f_;
};

// The LQ equilibrium from +-1: paths x (1 - t/2).
TrajectoryEnsemble lq_ensemble(const DiscreteFlow& flow) {
  const int N = flow.grid().intervals();
  std::vector<Path> paths;
  for (double x : {-1.0, 1.0}) paths.push_back(integrate_path(flow, 0, vec1(x), Mat::Constant(1, N, -x / 2)));
  return TrajectoryEnsemble(paths, Vec::Constant(2, 0.5), flow.grid());
}

std::vector<ValueQuery> interior_samples(const TimeGrid& grid, int n) {
  std::vector<ValueQuery> out;
  for (int k = 0; k < n; ++k)
    out.push_back({1 + (7 * k) % (grid.intervals() - 1), vec1(-1.0 + 2.0 * ((k * 0.618034) - std::floor(k * 0.618034)))});
  return out;
}

}  // namespace

TEST_SUITE("pde_check") {

TEST_CASE("test functions") {
  TestFunction phi{vec1(0.0), 0.5, 0.8, 0.4};
  CHECK(phi.value(0.0, vec1(0.0)) == doctest::Approx(1.0));
  CHECK(phi.value(0.0, vec1(0.6)) == 0.0);
  CHECK(phi.value(0.85, vec1(0.0)) == 0.0);
  CHECK_FALSE(phi.active(0.0, vec1(0.5)));
  const double t = 0.55;
  const Vec x = vec1(0.2);
  const double h = 1e-6;
  CHECK(phi.dt(t, x) == doctest::Approx((phi.value(t + h, x) - phi.value(t - h, x)) / (2 * h)).epsilon(1e-6));
  CHECK(phi.dx(t, x)(0) ==
        doctest::Approx((phi.value(t, vec1(0.2 + h)) - phi.value(t, vec1(0.2 - h))) / (2 * h)).epsilon(1e-6));
  const auto battery = random_test_functions(Box::cube(1, 1.0), 1.0, 20, 4);
  CHECK(battery.size() == 20);
  for (const auto& f : battery) {
    CHECK(f.t_end >= 0.6);
    CHECK(f.t_end <= 0.95);
  }
}

TEST_CASE("stationary Dirac with zero field") {
  const TimeGrid grid(1.0, 100);
  const auto flow = FlowOfMeasures::constant(ParticleMeasure::dirac(vec1(0.0)), grid);
  const VelocityField zero = [](int, const Vec& x) { return Vec(Vec::Zero(x.size())); };
  const auto r = continuity_residual(flow, zero, random_test_functions(Box::cube(1, 1.0), 1.0, 20, 1));
  CHECK(r.max_residual <= 1e-4);
}

TEST_CASE("LQ transport satisfies the continuity equation") {
  const DiscreteFlow flow(oracle::scalar_dynamics(), TimeGrid(1.0, 200));
  const FlowOfMeasures mflow = flow_of(lq_ensemble(flow));
  const auto tests = random_test_functions(Box::cube(1, 1.0), 1.0, 20, 7);
  const VelocityField v = [&](int node, const Vec& x) { return Vec(-x / (2.0 - flow.grid().time(node))); };
  CHECK(continuity_residual(mflow, v, tests).max_residual <= 5e-3);

  const VelocityField wrong = [&](int node, const Vec& x) { return Vec(v(node, x).array() + 1.0); };
  TestFunction straddle{vec1(0.9), 0.5, 0.9, 0.45};
  CHECK(continuity_residual(mflow, wrong, {straddle}).max_residual >= 0.05);
}

TEST_CASE("HJB residual of the LQ value") {
  const TimeGrid grid(1.0, 100);
  const DiscreteFlow flow(oracle::scalar_dynamics(), grid);
  const auto model = oracle::lq_model();
  const auto mflow = FlowOfMeasures::constant(ParticleMeasure::dirac(vec1(0.0)), grid);
  auto samples = interior_samples(grid, 60);
  samples.push_back({100, vec1(0.4)});
  SUBCASE("discrete value function") {
    ValueProbe probe(flow, model, mflow);
    const auto r = hjb_residual(probe, flow.dynamics(), model, mflow, samples);
    CHECK(r.kept + r.skipped == 60);
    CHECK(r.fraction_below(1e-3) >= 0.8);
    CHECK(r.terminal_max <= 1e-12);
  }
  SUBCASE("closed form shifted by eps t") {
    const double eps = 0.01;
    ClosedFormValue shifted(grid, [&](double t, const Vec& x) { return oracle::lq_value(t, x(0)) + eps * t; });
    const auto r = hjb_residual(shifted, flow.dynamics(), model, mflow, samples);
    CHECK(r.median == doctest::Approx(eps).epsilon(0.05));
  }
}

TEST_CASE("monotonicity of mean couplings") {
  const auto pairs = random_measure_pairs(Box::cube(2, 1.0), 30, 6, 2);
  std::vector<Vec> witness;
  for (const auto& [a, b] : pairs) witness.push_back(a.point(0));
  const auto up = monotonicity_check([](const Vec& x, const ParticleMeasure& m) { return x.dot(m.mean()); }, pairs, witness);
  const auto down = monotonicity_check([](const Vec& x, const ParticleMeasure& m) { return -x.dot(m.mean()); }, pairs, witness);
  REQUIRE(up.pairings.size() == pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double d2 = (pairs[k].first.mean() - pairs[k].second.mean()).squaredNorm();
    CHECK(std::abs(up.pairings[k] - d2) <= 1e-10);
    CHECK(std::abs(down.pairings[k] + d2) <= 1e-10);
  }
  CHECK(up.monotone);
  CHECK(up.strictly_monotone);
  CHECK_FALSE(down.monotone);

  const auto m = pairs[0].first;
  const auto same = monotonicity_check([](const Vec& x, const ParticleMeasure& mu) { return x.dot(mu.mean()); },
                                       {{m, m}}, witness);
  CHECK(same.pairings[0] == 0.0);
  CHECK(same.strictly_monotone);
}

TEST_CASE("uniqueness check") {
  const DiscreteFlow flow(oracle::scalar_dynamics(), TimeGrid(1.0, 40));
  std::vector<ValueQuery> probes;
  for (int i : {0, 20})
    for (double x : {-1.0, 0.0, 1.0}) probes.push_back({i, vec1(x)});
  EquilibriumConfig cfg;
  SUBCASE("decoupled") {
    const auto r = uniqueness_check(flow, oracle::lq_model(), oracle::diracs_1d({-1.0, 1.0}), cfg, 3, probes, Box::cube(1, 1.0));
    CHECK_FALSE(r.skipped);
    CHECK(r.converged_runs == 3);
    CHECK(r.max_value_gap <= 1e-10);
  }
  SUBCASE("symmetric monotone instance") {
    const auto r = uniqueness_check(flow, oracle::symmetric_model(), ParticleMeasure::dirac(vec1(0.0)), cfg, 3, probes, Box::cube(1, 1.0));
    CHECK(r.converged_runs >= 2);
    CHECK(r.max_value_gap <= 5e-3);
  }
  SUBCASE("anti-monotone coupling is skipped") {
    ModelSpec spec;
    spec.coupling = CouplingKind::Mean;
    spec.theta = -1.0;
    const auto r = uniqueness_check(flow, CompositeModel(spec), oracle::diracs_1d({-1.0, 1.0}), cfg, 3, probes, Box::cube(1, 1.0));
    CHECK(r.skipped);
    CHECK(r.reason.find("not monotone") != std::string::npos);
  }
}

TEST_CASE("feedback synthesis") {
  SUBCASE("LQ feedback reproduces x (1 - t/2)") {
    const DiscreteFlow flow(oracle::scalar_dynamics(), TimeGrid(1.0, 100));
    const auto model = oracle::lq_model();
    const auto eta = lq_ensemble(flow);
    ValueProbe probe(flow, model, flow_of(eta));
    const auto r = synthesis_check(probe, flow.dynamics(), model, eta);
    CHECK(r.skipped == 0);
    CHECK(r.max_path_deviation <= 1e-3);
  }
  SUBCASE("no costs: constant paths") {
    const DiscreteFlow flow(oracle::scalar_dynamics(), TimeGrid(1.0, 20));
    const CompositeModel model{ModelSpec{}};
    const auto eta = reference_ensemble(flow, oracle::diracs_1d({-1.0, 0.5}));
    ValueProbe probe(flow, model, flow_of(eta));
    CHECK(synthesis_check(probe, flow.dynamics(), model, eta).max_path_deviation == 0.0);
  }
  SUBCASE("symmetric instance stays at zero") {
    const DiscreteFlow flow(oracle::scalar_dynamics(), TimeGrid(1.0, 20));
    const auto model = oracle::symmetric_model();
    const auto eta = reference_ensemble(flow, ParticleMeasure::dirac(vec1(0.0)));
    ValueProbe probe(flow, model, flow_of(eta));
    CHECK(synthesis_check(probe, flow.dynamics(), model, eta).max_path_deviation <= 1e-8);
  }
}

}  // TEST_SUITE
