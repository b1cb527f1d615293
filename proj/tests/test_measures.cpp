#include "doctest.h"
#include "oracles.hpp"

#include "mfg/measures.hpp"

#include <random>
#include <sstream>

using namespace mfg;
using oracle::diracs_1d;
using oracle::vec1;

TEST_SUITE("measures") {

TEST_CASE("measure validation") {
  CHECK_THROWS_AS(ParticleMeasure(Mat::Zero(1, 2), Vec::Constant(2, 0.4)), InvalidArgument);
  Vec w(2);
  w << 1.5, -0.5;
  CHECK_THROWS_AS(ParticleMeasure(Mat::Zero(1, 2), w), InvalidArgument);
  CHECK_THROWS_AS(ParticleMeasure(Mat::Zero(1, 0), Vec(0)), InvalidArgument);
}

TEST_CASE("pushforward of the reference ensemble at t = 0 is m0") {
  const DiscreteFlow flow(LinearDynamics(Mat::Constant(1, 1, 0.4), Mat::Identity(1, 1), 1.0),
                          TimeGrid(1.0, 10));
  const auto m0 = diracs_1d({-1.0, 0.3, 2.0}, {0.2, 0.5, 0.3});
  const ParticleMeasure e0 = pushforward_eval(reference_ensemble(flow, m0), 0);
  CHECK(e0.points() == m0.points());
  CHECK(e0.weights() == m0.weights());
}

TEST_CASE("pushforward of a single path is a Dirac on it") {
  const DiscreteFlow flow(oracle::scalar_dynamics(), TimeGrid(1.0, 10));
  const Path p = integrate_path(flow, 0, vec1(0.5), Mat::Constant(1, 10, 2.0));
  const TrajectoryEnsemble eta({p}, Vec::Ones(1), flow.grid());
  for (int i = 0; i <= 10; ++i) {
    const ParticleMeasure m = pushforward_eval(eta, i);
    CHECK(m.size() == 1);
    CHECK(m.point(0)(0) == doctest::Approx(0.5 + 2.0 * flow.grid().time(i)));
  }
}

TEST_CASE("constant paths at +-1 give the same marginal at every node") {
  const DiscreteFlow flow(oracle::scalar_dynamics(), TimeGrid(1.0, 8));
  const auto m0 = diracs_1d({-1.0, 1.0});
  const FlowOfMeasures f = flow_of(reference_ensemble(flow, m0));
  for (int i = 0; i <= 8; ++i) CHECK(wasserstein1(f.at(i), m0) == 0.0);
}

TEST_CASE("W1 basic values") {
  const auto mu = diracs_1d({0.0, 1.0});
  CHECK(wasserstein1(mu, mu) == 0.0);
  Vec x(2), y(2);
  x << 1.0, 2.0;
  y << -2.0, 6.0;
  CHECK(wasserstein1(ParticleMeasure::dirac(x), ParticleMeasure::dirac(y)) == doctest::Approx(5.0));
  CHECK(wasserstein1(mu, diracs_1d({2.0, 3.0})) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("W1 metric properties against the LP oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const int dim = 1 + trial % 3;
    std::uniform_int_distribution<int> count(1, 30);
    const auto a = oracle::random_measure(rng, dim, count(rng));
    const auto b = oracle::random_measure(rng, dim, count(rng));
    const auto c = oracle::random_measure(rng, dim, count(rng));
    const double ab = wasserstein1(a, b);
    CHECK(ab == doctest::Approx(oracle::w1_lp(a, b)).epsilon(1e-9));
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - wasserstein1(b, a)) < 1e-12);
    CHECK(ab <= wasserstein1(a, c) + wasserstein1(c, b) + 1e-12);
    CHECK(wasserstein1(a, a) == 0.0);
  }
}

TEST_CASE("network W1 agrees with the sorted 1D formula") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = oracle::random_measure(rng, 1, 1 + trial);
    const auto b = oracle::random_measure(rng, 1, 20 - trial);
    CHECK(wasserstein1_network(a, b) == doctest::Approx(wasserstein1_sorted(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("W1 rejects mismatched dimensions") {
  CHECK_THROWS_AS(wasserstein1(ParticleMeasure::dirac(Vec::Zero(1)), ParticleMeasure::dirac(Vec::Zero(2))),
                  InvalidArgument);
}

TEST_CASE("moments") {
  CHECK(moment_alpha(ParticleMeasure::dirac(vec1(-3.0)), 2.5) == doctest::Approx(std::pow(3.0, 2.5)));
  CHECK(moment_alpha(diracs_1d({0.0, 2.0}), 2.0) == doctest::Approx(2.0));
  CHECK(moment_alpha(diracs_1d({0.0, 0.0, 0.0}), 3.0) == 0.0);
  CHECK_THROWS_AS(moment_alpha(diracs_1d({1.0}), 1.0), InvalidArgument);
}

TEST_CASE("admissibility") {
  const LinearDynamics dyn(Mat::Constant(1, 1, 0.5), Mat::Identity(1, 1), 1.0);
  const DiscreteFlow flow(dyn, TimeGrid(1.0, 50));
  const auto m0 = diracs_1d({-1.0, 2.0});
  const TrajectoryEnsemble ref = reference_ensemble(flow, m0);

  SUBCASE("reference ensemble with the reference moment bound") {
    const auto r = check_admissible(ref, m0, dyn, reference_moment_bound(dyn, m0, 2.0), 2.0);
    CHECK(r.initial_match == 0.0);
    CHECK(r.admissible);
  }
  SUBCASE("wrong starts") {
    const auto r = check_admissible(ref, diracs_1d({-1.0, 3.0}), dyn, 1e6, 2.0);
    CHECK(r.initial_match > 0.1);
    CHECK_FALSE(r.admissible);
  }
  SUBCASE("static ensemble has zero moment") {
    const LinearDynamics still(Mat::Zero(1, 1), Mat::Identity(1, 1), 1.0);
    const auto eta = reference_ensemble(DiscreteFlow(still, TimeGrid(1.0, 50)), m0);
    const auto r = check_admissible(eta, m0, still, 0.0, 2.0);
    CHECK(r.moment == 0.0);
    CHECK(r.admissible);
  }
}

TEST_CASE("disintegration") {
  const DiscreteFlow flow(oracle::scalar_dynamics(), TimeGrid(1.0, 4));
  auto path = [&](double x, double u) { return integrate_path(flow, 0, vec1(x), Mat::Constant(1, 4, u)); };

  SUBCASE("distinct starts") {
    Vec w(3);
    w << 0.2, 0.3, 0.5;
    const TrajectoryEnsemble eta({path(0, 0), path(1, 0), path(2, 1)}, w, flow.grid());
    const auto groups = disintegrate(eta);
    REQUIRE(groups.size() == 3);
    for (const auto& g : groups) {
      CHECK(g.path_indices.size() == 1);
      CHECK(g.conditional_weights(0) == 1.0);
    }
  }
  SUBCASE("shared start with weights 0.3 / 0.7") {
    Vec w(2);
    w << 0.3, 0.7;
    const TrajectoryEnsemble eta({path(1, 0), path(1, 2)}, w, flow.grid());
    const auto groups = disintegrate(eta);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].mass == doctest::Approx(1.0));
    CHECK(groups[0].conditional_weights(0) == doctest::Approx(0.3));
    CHECK(groups[0].conditional_weights(1) == doctest::Approx(0.7));
  }
  SUBCASE("reassembly") {
    Vec w(4);
    w << 0.1, 0.2, 0.3, 0.4;
    const TrajectoryEnsemble eta({path(0, 0), path(1, 0), path(0, 1), path(1, -1)}, w, flow.grid());
    CHECK((reassemble_weights(disintegrate(eta), 4) - w).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("measure CSV round trip and row errors") {
  const auto mu = diracs_1d({-0.25, 1.5}, {0.25, 0.75});
  std::stringstream ss;
  write_measure_csv(ss, mu);
  const ParticleMeasure back = read_measure_csv(ss);
  CHECK(back.points() == mu.points());
  CHECK(back.weights() == mu.weights());

  std::stringstream bad("w,x1\n0.5,1.0\n-0.5,2.0\n");
  try {
    read_measure_csv(bad);
    FAIL("negative weight accepted");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

}  // TEST_SUITE
