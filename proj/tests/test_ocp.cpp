#include "doctest.h"
#include "oracles.hpp"

#include "mfg/bounds.hpp"
#include "mfg/ocp.hpp"
#include "mfg/value_probe.hpp"

#include <random>

using namespace mfg;
using oracle::vec1;

namespace {

struct LqSetup {
  DiscreteFlow flow;
  CompositeModel model;
  FlowOfMeasures mflow;
  explicit LqSetup(int N, CompositeModel m = oracle::lq_model())
      : flow(oracle::scalar_dynamics(), TimeGrid(1.0, N)),
        model(std::move(m)),
        mflow(FlowOfMeasures::constant(ParticleMeasure::dirac(vec1(0.0)), flow.grid())) {}
};

}  // namespace

TEST_SUITE("ocp") {

TEST_CASE("LQ best response from x = 1") {
  const LqSetup s(100);
  const OcpSolution sol = solve_best_response(s.flow, s.model, s.mflow, 0, vec1(1.0));
  CHECK((sol.controls().array() + 0.5).abs().maxCoeff() < 1e-8);
  CHECK(sol.cost == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(sol.path.final_state()(0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK((sol.adjoint.array() - 0.5).abs().maxCoeff() < 1e-8);
}

TEST_CASE("LQ best response from interior nodes") {
  const LqSetup s(50);
  for (int i0 : {10, 25, 40}) {
    const double t0 = s.flow.grid().time(i0);
    const double x = 0.8;
    const OcpSolution sol = solve_best_response(s.flow, s.model, s.mflow, i0, vec1(x));
    CHECK((sol.controls().array() + x / (2.0 - t0)).abs().maxCoeff() < 1e-8);
    CHECK(sol.cost == doctest::Approx(oracle::lq_value(t0, x)).epsilon(1e-10));
  }
}

TEST_CASE("trivial problems have zero optimal control") {
  SUBCASE("F = G = 0") {
    const LqSetup s(20, CompositeModel(ModelSpec{}));
    const OcpSolution sol = solve_best_response(s.flow, s.model, s.mflow, 0, vec1(1.3));
    CHECK(sol.controls().norm() == 0.0);
    CHECK(sol.cost == 0.0);
    CHECK(pmp_residual(s.flow, s.model, s.mflow, sol) == 0.0);
  }
  SUBCASE("x = 0 in the LQ benchmark") {
    const LqSetup s(20);
    const OcpSolution sol = solve_best_response(s.flow, s.model, s.mflow, 0, vec1(0.0));
    CHECK(sol.controls().norm() == 0.0);
    CHECK(sol.cost == 0.0);
  }
}

TEST_CASE("adjoint gradient matches finite differences") {
  ModelSpec spec;
  spec.q = 0.4;
  spec.beta = 0.7;
  spec.coupling = CouplingKind::Convolution;
  spec.amplitude = 0.5;
  spec.width = 0.7;
  spec.terminal_g = 1.5;
  spec.terminal_theta = 0.3;
  const CompositeModel model(spec);
  Mat A(2, 2);
  A << 0.1, 0.5, -0.4, -0.2;
  Mat B(2, 1);
  B << 0.3, 1.0;
  const DiscreteFlow flow(LinearDynamics(A, B, 1.0), TimeGrid(1.0, 12));
  std::mt19937_64 rng(9);
  const auto m0 = oracle::random_measure(rng, 2, 4);
  const FlowOfMeasures mflow = flow_of(reference_ensemble(flow, m0));
  Vec x(2);
  x << 0.5, -0.8;
  std::normal_distribution<double> normal;
  Mat u(1, 9);
  for (int i = 0; i < 9; ++i) u(0, i) = normal(rng);
  const CostGradient cg = ocp_cost_gradient(flow, model, mflow, 3, x, u);
  CHECK(cg.cost == doctest::Approx(ocp_cost(flow, model, mflow, 3, x, u)));
  for (int i = 0; i < 9; ++i) {
    Mat a = u, b = u;
    a(0, i) += 1e-6;
    b(0, i) -= 1e-6;
    const double fd = (ocp_cost(flow, model, mflow, 3, x, a) - ocp_cost(flow, model, mflow, 3, x, b)) / 2e-6;
    CHECK(cg.grad(0, i) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("flow on another grid is rejected") {
  const LqSetup s(20);
  const auto other = FlowOfMeasures::constant(ParticleMeasure::dirac(vec1(0.0)), TimeGrid(1.0, 10));
  CHECK_THROWS_AS(solve_best_response(s.flow, s.model, other, 0, vec1(1.0)), InvalidArgument);
}

TEST_CASE("multistart agrees on a convex problem") {
  const LqSetup s(40);
  std::vector<Mat> starts{Mat::Zero(1, 40), Mat::Constant(1, 40, 2.0), Mat::Constant(1, 40, -3.0)};
  const OcpSolution sol = solve_multistart(s.flow, s.model, s.mflow, 0, vec1(-1.0), starts);
  CHECK((sol.controls().array() - 0.5).abs().maxCoeff() < 1e-7);
}

TEST_CASE("PMP residual") {
  const LqSetup s(100);
  const OcpSolution sol = solve_best_response(s.flow, s.model, s.mflow, 0, vec1(1.0));
  CHECK(pmp_residual(s.flow, s.model, s.mflow, sol) <= 1e-6);

  OcpSolution bad = sol;
  bad.path = integrate_path(s.flow, 0, vec1(1.0), (sol.controls().array() + 0.1).matrix());
  bad.adjoint = ocp_cost_gradient(s.flow, s.model, s.mflow, 0, vec1(1.0), bad.path.controls).adjoint;
  CHECK(pmp_residual(s.flow, s.model, s.mflow, bad) >= 0.05);
}

TEST_CASE("value function on the LQ benchmark") {
  const LqSetup s(100);
  ValueProbe probe(s.flow, s.model, s.mflow);
  for (int i : {0, 30, 70, 99})
    for (double x : {-1.0, -0.3, 0.6, 1.0}) {
      const double t = s.flow.grid().time(i);
      CHECK(value_function(probe, i, vec1(x)) == doctest::Approx(oracle::lq_value(t, x)).epsilon(1e-4));
    }
  CHECK(value_function(probe, 100, vec1(0.7)) == s.model.terminal(vec1(0.7), s.mflow.at(100)));
}

TEST_CASE("value function is zero without costs") {
  const LqSetup s(20, CompositeModel(ModelSpec{}));
  ValueProbe probe(s.flow, s.model, s.mflow);
  for (double x : {-2.0, 0.0, 3.0}) CHECK(value_function(probe, 4, vec1(x)) == 0.0);
}

TEST_CASE("value probe caches and batches consistently") {
  const LqSetup s(40);
  ValueProbe a(s.flow, s.model, s.mflow);
  ValueProbe b(s.flow, s.model, s.mflow);
  std::vector<ValueQuery> q;
  for (int k = 0; k < 10; ++k) q.push_back({k % 5 * 8, vec1(-1.0 + 0.2 * k)});
  q.push_back(q.front());
  const auto batch = a.values(q);
  CHECK(a.cache_size() == 10);
  // Warm starts depend on what is cached, so other orders agree to solver tolerance only.
  for (std::size_t k = 0; k < q.size(); ++k)
    CHECK(batch[k] == doctest::Approx(b.value(q[k].node, q[k].x)).epsilon(1e-12));
  CHECK(batch.front() == batch.back());
  ValueProbe c(s.flow, s.model, s.mflow);
  CHECK(c.values(q) == batch);
}

TEST_CASE("dynamic programming residual") {
  const LqSetup s(100);
  ValueProbe probe(s.flow, s.model, s.mflow);
  CHECK(dpp_residual(probe, 0, 50, vec1(1.0)) <= 1e-4);
  CHECK(dpp_residual(probe, 20, 20, vec1(1.0)) == 0.0);
  CHECK(dpp_residual(probe, 0, 100, vec1(0.8)) <= 1e-8);
  CHECK_THROWS_AS(dpp_residual(probe, 10, 5, vec1(0.0)), InvalidArgument);
}

TEST_CASE("a-priori constants from explicit inputs") {
  AprioriInputs in;
  in.T = 1.0;
  in.c0 = 1.0;
  in.c1 = 0.0;
  in.G_sup = 0.5;
  in.norm_B = 1.0;
  SUBCASE("K = 1") { CHECK(apriori_from_inputs(in).K == doctest::Approx(1.0)); }
  SUBCASE("A = 0 gives C1 = max(1, |B| sqrt(T) K)") {
    in.norm_B = 2.5;
    in.T = 2.0;
    const auto b = apriori_from_inputs(in);
    CHECK(b.C1_tilde == doctest::Approx(std::max(1.0, 2.5 * std::sqrt(2.0) * b.K)));
  }
  SUBCASE("Dirac at the origin with alpha = 2") {
    in.m0_moment = 0.0;
    const auto b = apriori_from_inputs(in);
    CHECK(b.R_star == doctest::Approx(b.C2_tilde * b.C2_tilde));
  }
  SUBCASE("invalid inputs") {
    in.c0 = 0.0;
    CHECK_THROWS_AS(apriori_from_inputs(in), InvalidModel);
  }
}

TEST_CASE("LQ solves respect the a-priori bounds") {
  const LqSetup s(100);
  const auto m0 = oracle::diracs_1d({-1.0, 1.0});
  const AprioriBounds bounds = apriori_bounds(s.flow.dynamics(), s.model, m0, 2.0);
  for (double x : {-1.0, 0.2, 1.0}) {
    const OcpSolution sol = solve_best_response(s.flow, s.model, s.mflow, 0, vec1(x));
    const BoundCertificate c = certify_solution(s.flow, bounds, sol);
    CHECK(c.pass);
    CHECK(c.control_l2 <= kBoundSlack * bounds.K);
  }
}

}  // TEST_SUITE
